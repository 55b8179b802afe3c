//! Occupation-number states over spatial modes carrying a two-valued spectral tag.

use std::collections::BTreeMap;

use crate::error::{Result, SimError};
use crate::operator::C64;

/// Spatial modes of the gate: two rails and two ancillas.
pub const SPATIAL_MODES: usize = 4;
/// Every spatial mode has a matched and an orthogonal spectral component.
pub const MODES: usize = 2 * SPATIAL_MODES;
/// Largest total photon number a state may carry.
pub const MAX_PHOTONS: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Tag {
    Matched,
    Orthogonal,
}

impl Tag {
    pub const ALL: [Tag; 2] = [Tag::Matched, Tag::Orthogonal];

    fn index(self) -> usize {
        match self {
            Tag::Matched => 0,
            Tag::Orthogonal => 1,
        }
    }
}

/// `(spatial index, spectral tag)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Mode {
    pub spatial: usize,
    pub tag: Tag,
}

impl Mode {
    pub fn new(spatial: usize, tag: Tag) -> Self {
        Mode { spatial, tag }
    }

    pub fn index(&self) -> usize {
        2 * self.spatial + self.tag.index()
    }

    pub fn from_index(i: usize) -> Self {
        Mode {
            spatial: i / 2,
            tag: if i % 2 == 0 { Tag::Matched } else { Tag::Orthogonal },
        }
    }
}

pub type Occupation = [u8; MODES];

/// Superposition of occupation-number states with complex amplitudes.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PhotonicState {
    terms: BTreeMap<Occupation, C64>,
}

fn factorial(n: u8) -> f64 {
    (1..=n as u32).map(f64::from).product()
}

/// `√(Π nₖ!)`, the normalization of a product of creation operators.
pub fn occupation_norm(occ: &Occupation) -> f64 {
    occ.iter().map(|&n| factorial(n)).product::<f64>().sqrt()
}

pub fn photon_count(occ: &Occupation) -> usize {
    occ.iter().map(|&n| n as usize).sum()
}

impl PhotonicState {
    pub fn vacuum() -> Self {
        Self::basis(&[0; MODES], C64::new(1.0, 0.0)).unwrap()
    }

    pub fn empty() -> Self {
        PhotonicState::default()
    }

    /// One occupation-number state with the given amplitude.
    pub fn basis(occ: &Occupation, amplitude: C64) -> Result<Self> {
        let mut s = PhotonicState::empty();
        s.add(occ, amplitude)?;
        Ok(s)
    }

    /// Photons listed by mode, one entry per photon.
    pub fn from_photons(modes: &[Mode], amplitude: C64) -> Result<Self> {
        let mut occ = [0u8; MODES];
        for m in modes {
            if m.spatial >= SPATIAL_MODES {
                return Err(SimError::param(format!("spatial mode {} out of range", m.spatial)));
            }
            occ[m.index()] += 1;
        }
        Self::basis(&occ, amplitude)
    }

    pub fn add(&mut self, occ: &Occupation, amplitude: C64) -> Result<()> {
        let n = photon_count(occ);
        if n > MAX_PHOTONS {
            return Err(SimError::Capacity(n));
        }
        *self.terms.entry(*occ).or_insert(C64::new(0.0, 0.0)) += amplitude;
        Ok(())
    }

    pub fn add_state(&mut self, other: &PhotonicState, factor: C64) {
        for (occ, a) in &other.terms {
            *self.terms.entry(*occ).or_insert(C64::new(0.0, 0.0)) += a * factor;
        }
    }

    pub fn amplitude(&self, occ: &Occupation) -> C64 {
        self.terms.get(occ).copied().unwrap_or(C64::new(0.0, 0.0))
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Occupation, &C64)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.terms.values().map(|a| a.norm_sqr()).sum()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &PhotonicState) -> C64 {
        self.terms
            .iter()
            .map(|(occ, a)| a.conj() * other.amplitude(occ))
            .sum()
    }

    pub fn scaled(&self, factor: C64) -> PhotonicState {
        PhotonicState {
            terms: self.terms.iter().map(|(o, a)| (*o, a * factor)).collect(),
        }
    }

    /// Drops terms whose amplitude is below `eps` in magnitude.
    pub fn pruned(mut self, eps: f64) -> PhotonicState {
        self.terms.retain(|_, a| a.norm() > eps);
        self
    }

    /// Photon numbers present in the state, each term counted once.
    pub fn photon_numbers(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.terms.keys().map(photon_count).collect();
        v.sort_unstable();
        v.dedup();
        v
    }
}
