//! The 24-element single-qubit Clifford group compiled to physical rotations.

use std::sync::OnceLock;

use nalgebra::Matrix2;
use rand::Rng;

use crate::C64;

/// Physical rotations available to the compiler, in tie-break order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Rotation {
    X90,
    Xm90,
    X180,
    Y90,
    Ym90,
    Y180,
}

impl Rotation {
    pub const ALL: [Rotation; 6] = [
        Rotation::X90,
        Rotation::Xm90,
        Rotation::X180,
        Rotation::Y90,
        Rotation::Ym90,
        Rotation::Y180,
    ];

    /// Rotation angle (rad), always positive.
    pub fn angle(self) -> f64 {
        match self {
            Rotation::X180 | Rotation::Y180 => std::f64::consts::PI,
            _ => std::f64::consts::FRAC_PI_2,
        }
    }

    /// Drive phase selecting the rotation axis (rad).
    pub fn phase(self) -> f64 {
        use std::f64::consts::{FRAC_PI_2, PI};
        match self {
            Rotation::X90 | Rotation::X180 => 0.0,
            Rotation::Xm90 => PI,
            Rotation::Y90 | Rotation::Y180 => FRAC_PI_2,
            Rotation::Ym90 => 3.0 * FRAC_PI_2,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Rotation::X90 => "X/2",
            Rotation::Xm90 => "-X/2",
            Rotation::X180 => "X",
            Rotation::Y90 => "Y/2",
            Rotation::Ym90 => "-Y/2",
            Rotation::Y180 => "Y",
        }
    }

    /// `exp(−iθ/2 (cos φ σx + sin φ σy))`.
    pub fn unitary(self) -> Matrix2<C64> {
        rotation_unitary(self.angle(), self.phase())
    }
}

pub fn rotation_unitary(theta: f64, phi: f64) -> Matrix2<C64> {
    let (s, c) = (0.5 * theta).sin_cos();
    let e = C64::from_polar(1.0, phi);
    let mi = C64::new(0.0, -1.0);
    Matrix2::new(C64::from(c), mi * s * e.conj(), mi * s * e, C64::from(c))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliffordGate {
    pub index: usize,
    /// Rotations in time order; empty for the identity.
    pub decomposition: Vec<Rotation>,
}

impl CliffordGate {
    pub fn unitary(&self) -> Matrix2<C64> {
        compose(&self.decomposition)
    }
}

fn compose(rotations: &[Rotation]) -> Matrix2<C64> {
    rotations
        .iter()
        .fold(Matrix2::identity(), |u, r| r.unitary() * u)
}

/// Phase-fixed, rounded matrix entries used to identify group elements.
fn class_key(u: &Matrix2<C64>) -> [i64; 8] {
    // Clifford entries have modulus 0, 1/√2 or 1; the first non-zero one fixes the phase.
    let pivot = u
        .iter()
        .copied()
        .find(|z| z.norm() > 0.3)
        .expect("unitary has a non-zero entry");
    let phase = pivot.conj() / pivot.norm();
    let mut key = [0i64; 8];
    for (k, z) in u.iter().enumerate() {
        let w = z * phase;
        key[2 * k] = (w.re * 1e9).round() as i64;
        key[2 * k + 1] = (w.im * 1e9).round() as i64;
    }
    key
}

/// True if `a` and `b` agree up to a global phase within `tol`.
pub fn equal_up_to_phase(a: &Matrix2<C64>, b: &Matrix2<C64>, tol: f64) -> bool {
    let overlap = (a.adjoint() * b).trace();
    (overlap.norm() - 2.0).abs() < tol
}

pub struct CliffordGroup {
    gates: Vec<CliffordGate>,
    /// `mul[a][b]`: element equal to applying `a` then `b`.
    mul: Vec<[usize; 24]>,
    inv: [usize; 24],
}

impl CliffordGroup {
    fn build() -> Self {
        let mut gates: Vec<CliffordGate> = Vec::new();
        let mut keys: Vec<[i64; 8]> = Vec::new();
        // Breadth-first over sequence length; within a length, lexicographic over `Rotation::ALL`.
        let mut frontier: Vec<Vec<Rotation>> = vec![Vec::new()];
        while gates.len() < 24 {
            let mut next = Vec::new();
            for seq in &frontier {
                let key = class_key(&compose(seq));
                if !keys.contains(&key) {
                    keys.push(key);
                    gates.push(CliffordGate {
                        index: gates.len(),
                        decomposition: seq.clone(),
                    });
                }
                for r in Rotation::ALL {
                    let mut s = seq.clone();
                    s.push(r);
                    next.push(s);
                }
            }
            frontier = next;
        }
        let unitaries: Vec<_> = gates.iter().map(|g| g.unitary()).collect();
        let find = |u: &Matrix2<C64>| {
            let key = class_key(u);
            keys.iter()
                .position(|k| *k == key)
                .expect("group is closed")
        };
        let mut mul = vec![[0usize; 24]; 24];
        let mut inv = [0usize; 24];
        for a in 0..24 {
            for b in 0..24 {
                mul[a][b] = find(&(unitaries[b] * unitaries[a]));
            }
            inv[a] = find(&unitaries[a].adjoint());
        }
        Self { gates, mul, inv }
    }

    pub fn get() -> &'static Self {
        static GROUP: OnceLock<CliffordGroup> = OnceLock::new();
        GROUP.get_or_init(Self::build)
    }

    pub fn gates(&self) -> &[CliffordGate] {
        &self.gates
    }

    pub fn gate(&self, index: usize) -> &CliffordGate {
        &self.gates[index]
    }

    /// Index of "apply `a`, then `b`".
    pub fn then(&self, a: usize, b: usize) -> usize {
        self.mul[a][b]
    }

    pub fn inverse(&self, a: usize) -> usize {
        self.inv[a]
    }

    /// Index of the element whose first rotation sequence is exactly `rotations`.
    pub fn find(&self, rotations: &[Rotation]) -> Option<usize> {
        let key = class_key(&compose(rotations));
        self.gates
            .iter()
            .position(|g| class_key(&g.unitary()) == key)
    }

    pub fn mean_pulses(&self) -> f64 {
        self.gates
            .iter()
            .map(|g| g.decomposition.len())
            .sum::<usize>() as f64
            / 24.0
    }
}

/// `m` uniformly drawn Cliffords plus the recovery element that inverts their product.
pub fn clifford_sequence<R: Rng + ?Sized>(
    m: usize,
    rng: &mut R,
) -> (Vec<CliffordGate>, CliffordGate) {
    assert!(m >= 1, "sequence length must be >= 1");
    let group = CliffordGroup::get();
    let mut total = 0;
    let mut gates = Vec::with_capacity(m);
    for _ in 0..m {
        let k = rng.random_range(0..24);
        total = group.then(total, k);
        gates.push(group.gate(k).clone());
    }
    let recovery = group.gate(group.inverse(total)).clone();
    (gates, recovery)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;

    #[test]
    fn group_has_24_distinct_elements() {
        let g = CliffordGroup::get();
        assert_eq!(g.gates().len(), 24);
        assert!(g.gate(0).decomposition.is_empty());
        for a in g.gates() {
            for b in g.gates() {
                if a.index != b.index {
                    assert!(!equal_up_to_phase(&a.unitary(), &b.unitary(), 1e-9));
                }
            }
        }
    }

    #[test]
    fn compilation_averages_below_two_pulses() {
        let mean = CliffordGroup::get().mean_pulses();
        assert!(mean <= 2.0);
        // Shortest decompositions: 1 × 0, 6 × 1, 11 × 2, 6 × 3 pulses.
        assert!((mean - 44.0 / 24.0).abs() < 1e-12, "{mean}");
    }

    #[test]
    fn tables_are_consistent() {
        let g = CliffordGroup::get();
        for a in 0..24 {
            assert_eq!(g.then(a, g.inverse(a)), 0);
            assert_eq!(g.then(g.inverse(a), a), 0);
            for b in 0..24 {
                let u = g.gate(b).unitary() * g.gate(a).unitary();
                assert!(equal_up_to_phase(
                    &u,
                    &g.gate(g.then(a, b)).unitary(),
                    1e-12
                ));
            }
        }
    }

    #[test]
    fn x_is_self_inverse() {
        let g = CliffordGroup::get();
        let x = g.find(&[Rotation::X180]).unwrap();
        assert_eq!(g.gate(g.inverse(x)).decomposition, vec![Rotation::X180]);
    }

    #[test]
    fn recovery_returns_to_ground() {
        let mut rng = stream_rng(7, 0);
        for m in [1, 2, 5, 50, 300] {
            let (gates, rec) = clifford_sequence(m, &mut rng);
            let u = gates
                .iter()
                .chain(std::iter::once(&rec))
                .fold(Matrix2::<C64>::identity(), |u, g| g.unitary() * u);
            let p0 = u[(0, 0)].norm_sqr();
            assert!((p0 - 1.0).abs() < 1e-12, "m = {m}: {p0}");
        }
    }

    #[test]
    fn draws_are_uniform() {
        let mut rng = stream_rng(11, 3);
        let n = 100_000;
        let mut counts = [0usize; 24];
        for _ in 0..n / 10 {
            let (gates, _) = clifford_sequence(10, &mut rng);
            for g in gates {
                counts[g.index] += 1;
            }
        }
        let p = 1.0 / 24.0;
        let mean = n as f64 * p;
        let sd = (n as f64 * p * (1.0 - p)).sqrt();
        for c in counts {
            assert!((c as f64 - mean).abs() < 3.5 * sd, "{counts:?}");
        }
    }
}
