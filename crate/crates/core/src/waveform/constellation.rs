//! Gray-labelled constellations with unit average energy.
//!
//! A symbol label is the integer formed by its bits, most significant bit
//! first. `Constellation::points()[label]` is the point carrying that label.

use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_4, TAU};
use core::fmt;

use crate::ComplexSample;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Modulation {
    Bpsk,
    Qpsk,
    Psk8,
    Qam16,
    Qam32,
    Qam64,
}

impl Modulation {
    pub const ALL: [Modulation; 6] = [
        Modulation::Bpsk,
        Modulation::Qpsk,
        Modulation::Psk8,
        Modulation::Qam16,
        Modulation::Qam32,
        Modulation::Qam64,
    ];

    pub const PSK: [Modulation; 3] = [Modulation::Bpsk, Modulation::Qpsk, Modulation::Psk8];

    pub fn bits_per_symbol(self) -> usize {
        match self {
            Modulation::Bpsk => 1,
            Modulation::Qpsk => 2,
            Modulation::Psk8 => 3,
            Modulation::Qam16 => 4,
            Modulation::Qam32 => 5,
            Modulation::Qam64 => 6,
        }
    }

    pub fn order(self) -> usize {
        1 << self.bits_per_symbol()
    }

    pub fn is_psk(self) -> bool {
        matches!(self, Modulation::Bpsk | Modulation::Qpsk | Modulation::Psk8)
    }

    pub fn name(self) -> &'static str {
        match self {
            Modulation::Bpsk => "BPSK",
            Modulation::Qpsk => "QPSK",
            Modulation::Psk8 => "8PSK",
            Modulation::Qam16 => "16-QAM",
            Modulation::Qam32 => "32-QAM",
            Modulation::Qam64 => "64-QAM",
        }
    }

    pub fn constellation(self) -> Constellation {
        Constellation::new(self)
    }
}

impl fmt::Display for Modulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn gray_inverse(mut g: usize) -> usize {
    let mut i = g;
    while g > 1 {
        g >>= 1;
        i ^= g;
    }
    i
}

#[derive(Debug, Clone)]
pub struct Constellation {
    modulation: Modulation,
    points: Vec<ComplexSample>,
}

impl Constellation {
    pub fn new(modulation: Modulation) -> Self {
        let raw = match modulation {
            Modulation::Bpsk => psk(2, 0.0),
            Modulation::Qpsk => psk(4, FRAC_PI_4),
            Modulation::Psk8 => psk(8, 0.0),
            Modulation::Qam16 => square_qam(2),
            Modulation::Qam32 => cross_qam32(),
            Modulation::Qam64 => square_qam(3),
        };
        let energy = raw.iter().map(|p| p.norm_sqr()).sum::<f64>() / raw.len() as f64;
        let scale = 1.0 / libm::sqrt(energy);
        Self {
            modulation,
            points: raw.into_iter().map(|p| p * scale).collect(),
        }
    }

    pub fn modulation(&self) -> Modulation {
        self.modulation
    }

    pub fn points(&self) -> &[ComplexSample] {
        &self.points
    }

    /// Packs `bits_per_symbol` bits (MSB first) into a symbol.
    pub fn map(&self, bits: &[u8]) -> ComplexSample {
        debug_assert_eq!(bits.len(), self.modulation.bits_per_symbol());
        let label = bits.iter().fold(0usize, |acc, &b| (acc << 1) | (b & 1) as usize);
        self.points[label]
    }

    /// Hard decision: label of the nearest point.
    pub fn decide(&self, x: ComplexSample) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (label, p) in self.points.iter().enumerate() {
            let d = (x - p).norm_sqr();
            if d < best_d {
                best_d = d;
                best = label;
            }
        }
        best
    }

    /// Appends the bits of `label` (MSB first) to `out`.
    pub fn push_bits(&self, label: usize, out: &mut Vec<u8>) {
        let k = self.modulation.bits_per_symbol();
        for i in (0..k).rev() {
            out.push(((label >> i) & 1) as u8);
        }
    }
}

fn psk(order: usize, offset: f64) -> Vec<ComplexSample> {
    (0..order)
        .map(|label| {
            let angle = offset + TAU * gray_inverse(label) as f64 / order as f64;
            ComplexSample::new(libm::cos(angle), libm::sin(angle))
        })
        .collect()
}

/// Square QAM with `bits_per_axis` Gray-coded bits on each of I and Q; the
/// high half of the label drives I.
fn square_qam(bits_per_axis: usize) -> Vec<ComplexSample> {
    let levels = 1usize << bits_per_axis;
    let mask = levels - 1;
    let amp = |g: usize| (2 * gray_inverse(g)) as f64 - (levels - 1) as f64;
    (0..levels * levels)
        .map(|label| ComplexSample::new(amp(label >> bits_per_axis), amp(label & mask)))
        .collect()
}

/// 32-point cross constellation. Labels start from an 8x4 Gray grid (3 bits
/// on I, 2 on Q); the eight outer columns (|I| = 7) fold onto the missing
/// rows |Q| = 5, which keeps most nearest neighbours one bit apart.
fn cross_qam32() -> Vec<ComplexSample> {
    let amp = |g: usize, levels: usize| (2 * gray_inverse(g)) as f64 - (levels - 1) as f64;
    (0..32)
        .map(|label| {
            let i = amp(label >> 2, 8);
            let q = amp(label & 3, 4);
            if libm::fabs(i) == 7.0 {
                let fi = if libm::fabs(q) == 1.0 { 1.0 } else { 3.0 };
                ComplexSample::new(i.signum() * fi, q.signum() * 5.0)
            } else {
                ComplexSample::new(i, q)
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_average_energy() {
        for m in Modulation::ALL {
            let c = m.constellation();
            assert_eq!(c.points().len(), m.order());
            let e = c.points().iter().map(|p| p.norm_sqr()).sum::<f64>() / m.order() as f64;
            assert!((e - 1.0).abs() < 1e-12, "{m}: {e}");
        }
    }

    #[test]
    fn points_are_distinct() {
        for m in Modulation::ALL {
            let pts = m.constellation().points().to_vec();
            for i in 0..pts.len() {
                for j in i + 1..pts.len() {
                    assert!((pts[i] - pts[j]).norm() > 0.1, "{m}: {i} {j}");
                }
            }
        }
    }

    #[test]
    fn qam16_energy_by_enumeration() {
        // Unnormalized grid {-3,-1,1,3}^2 averages 10.
        let mut sum = 0.0;
        for i in [-3.0f64, -1.0, 1.0, 3.0] {
            for q in [-3.0f64, -1.0, 1.0, 3.0] {
                sum += (i * i + q * q) / 10.0;
            }
        }
        assert!((sum / 16.0 - 1.0).abs() < 1e-12);
        let pts = Modulation::Qam16.constellation();
        let e = pts.points().iter().map(|p| p.norm_sqr()).sum::<f64>() / 16.0;
        assert!((e - 1.0).abs() < 1e-12);
    }

    fn nearest_neighbour_pairs(pts: &[ComplexSample]) -> Vec<(usize, usize)> {
        let mut dmin = f64::INFINITY;
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                dmin = dmin.min((pts[i] - pts[j]).norm());
            }
        }
        let mut pairs = Vec::new();
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                if (pts[i] - pts[j]).norm() < dmin * (1.0 + 1e-9) {
                    pairs.push((i, j));
                }
            }
        }
        pairs
    }

    #[test]
    fn gray_property_for_psk_and_square_qam() {
        for m in [
            Modulation::Bpsk,
            Modulation::Qpsk,
            Modulation::Psk8,
            Modulation::Qam16,
            Modulation::Qam64,
        ] {
            let pts = m.constellation().points().to_vec();
            let pairs = nearest_neighbour_pairs(&pts);
            assert!(!pairs.is_empty());
            for (a, b) in pairs {
                assert_eq!((a ^ b).count_ones(), 1, "{m}: labels {a} {b}");
            }
        }
    }

    #[test]
    fn qpsk_adjacent_points_differ_in_one_bit() {
        let c = Modulation::Qpsk.constellation();
        // Walk the circle in angle order.
        let mut order: Vec<usize> = (0..4).collect();
        order.sort_by(|&a, &b| {
            let pa = c.points()[a].arg();
            let pb = c.points()[b].arg();
            pa.partial_cmp(&pb).unwrap()
        });
        for i in 0..4 {
            let a = order[i];
            let b = order[(i + 1) % 4];
            assert_eq!((a ^ b).count_ones(), 1);
        }
    }

    #[test]
    fn qam32_is_quasi_gray() {
        let pts = Modulation::Qam32.constellation().points().to_vec();
        let pairs = nearest_neighbour_pairs(&pts);
        let one_bit = pairs.iter().filter(|(a, b)| (a ^ b).count_ones() == 1).count();
        assert!(one_bit * 4 >= pairs.len() * 3, "{one_bit} of {}", pairs.len());
    }

    #[test]
    fn decide_inverts_map() {
        for m in Modulation::ALL {
            let c = m.constellation();
            for (label, &p) in c.points().iter().enumerate() {
                assert_eq!(c.decide(p), label);
                let mut bits = Vec::new();
                c.push_bits(label, &mut bits);
                assert_eq!(c.map(&bits), p);
            }
        }
    }
}
