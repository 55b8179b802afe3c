import init, { gate_curve, jitter_visibility, raman_source } from "./pkg/sps_web.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

function show(el, fn) {
  try {
    el.classList.remove("error");
    fn();
  } catch (e) {
    el.classList.add("error");
    el.textContent = String(e.message ?? e);
  }
}

function updateVisibility() {
  show($("vis-out"), () => {
    $("vis-out").textContent = jitter_visibility(num("vis-x")).toFixed(6);
  });
}

function runGate() {
  const out = $("gate-out");
  show(out, () => {
    const grid = $("gate-grid").value.split(",").map((s) => Number(s.trim()));
    const flat = gate_curve(new Float64Array(grid), num("gate-random"));
    const rows = grid.map((x, i) =>
      `<tr><td>${x}</td><td>${flat[2 * i].toFixed(6)}</td><td>${flat[2 * i + 1].toFixed(6)}</td></tr>`);
    out.innerHTML = "<table><tr><th>ε₀/τ</th><th>visibility</th><th>min fidelity</th></tr>" + rows.join("") + "</table>";
  });
}

function runRaman() {
  const out = $("r-out");
  out.textContent = "Computing…";
  setTimeout(() => show(out, () => {
    const [ind, eff] = raman_source(num("r-g"), num("r-kappa"), num("r-theta"), num("r-deph"), num("r-width"), num("r-peak"));
    out.textContent = `indistinguishability ${ind.toFixed(4)}, collection efficiency ${eff.toFixed(4)}`;
  }), 0);
}

await init();
$("status").textContent = "Ready.";
$("vis-x").addEventListener("input", updateVisibility);
$("gate-run").addEventListener("click", runGate);
$("r-run").addEventListener("click", runRaman);
updateVisibility();
