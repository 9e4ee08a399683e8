//! Spectral distribution functions and the sup distance between them.

use serde::Serialize;

/// A distribution function on the real line.
pub trait Cdf {
    fn value(&self, x: f64) -> f64;
    fn left_limit(&self, x: f64) -> f64;
    /// Points where the function may jump; empty for continuous functions.
    fn breakpoints(&self) -> Vec<f64>;
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Jump {
    pub at: f64,
    pub multiplicity: usize,
    pub mass: f64,
}

/// `N(λ) = #{eigenvalues ≤ λ}/|Q|` with clustered jumps.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectralStaircase {
    pub size: usize,
    pub eigenvalues: Vec<f64>,
    pub jumps: Vec<Jump>,
    pub merge_tol: f64,
}

impl SpectralStaircase {
    /// `eigs` must be ascending. Runs of eigenvalues whose consecutive gaps
    /// are at most `merge_tol` form one jump, placed at the run's mean.
    pub fn new(eigs: Vec<f64>, size: usize, merge_tol: f64) -> Self {
        assert!(eigs.windows(2).all(|w| w[0] <= w[1]), "eigenvalues must be sorted");
        assert!(size >= eigs.len() && size > 0, "window smaller than spectrum");
        let mut jumps = Vec::new();
        let mut start = 0;
        for i in 1..=eigs.len() {
            if i == eigs.len() || eigs[i] - eigs[i - 1] > merge_tol {
                let run = &eigs[start..i];
                if !run.is_empty() {
                    jumps.push(Jump {
                        at: run.iter().sum::<f64>() / run.len() as f64,
                        multiplicity: run.len(),
                        mass: run.len() as f64 / size as f64,
                    });
                }
                start = i;
            }
        }
        SpectralStaircase { size, eigenvalues: eigs, jumps, merge_tol }
    }

    pub fn count_le(&self, x: f64) -> usize {
        self.eigenvalues.partition_point(|&e| e <= x)
    }

    pub fn count_lt(&self, x: f64) -> usize {
        self.eigenvalues.partition_point(|&e| e < x)
    }

    /// Cluster containing `x` within the merge tolerance, if any.
    pub fn jump_near(&self, x: f64, tol: f64) -> Option<&Jump> {
        self.jumps.iter().find(|j| (j.at - x).abs() <= tol)
    }

    /// Jumps carrying at least `min_mass`.
    pub fn atoms(&self, min_mass: f64) -> Vec<&Jump> {
        self.jumps.iter().filter(|j| j.mass >= min_mass).collect()
    }

    /// `(λ, N(λ))` after each distinct eigenvalue.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("lambda,N\n");
        let mut i = 0;
        let e = &self.eigenvalues;
        while i < e.len() {
            let mut j = i;
            while j + 1 < e.len() && e[j + 1] == e[i] {
                j += 1;
            }
            out.push_str(&format!("{:.12e},{:.12e}\n", e[i], (j + 1) as f64 / self.size as f64));
            i = j + 1;
        }
        out
    }
}

impl Cdf for SpectralStaircase {
    fn value(&self, x: f64) -> f64 {
        self.count_le(x) as f64 / self.size as f64
    }

    fn left_limit(&self, x: f64) -> f64 {
        self.count_lt(x) as f64 / self.size as f64
    }

    fn breakpoints(&self) -> Vec<f64> {
        let mut b = self.eigenvalues.clone();
        b.dedup();
        b
    }
}

/// A continuous reference curve given by a closed formula.
pub struct AnalyticCdf {
    name: &'static str,
    f: fn(f64) -> f64,
}

impl AnalyticCdf {
    pub fn new(name: &'static str, f: fn(f64) -> f64) -> Self {
        AnalyticCdf { name, f }
    }

    /// Density of states of the Laplacian `2 − (shift + shift*)` on ℤ:
    /// `arccos(1 − λ/2)/π` on `[0, 4]`.
    pub fn z_laplacian() -> Self {
        Self::new("arccos(1-x/2)/pi", |x| {
            if x <= 0.0 {
                0.0
            } else if x >= 4.0 {
                1.0
            } else {
                (1.0 - x / 2.0).acos() / std::f64::consts::PI
            }
        })
    }

    pub fn name(&self) -> &'static str {
        self.name
    }
}

impl Cdf for AnalyticCdf {
    fn value(&self, x: f64) -> f64 {
        (self.f)(x)
    }

    fn left_limit(&self, x: f64) -> f64 {
        (self.f)(x)
    }

    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }
}

/// `sup_{x ∈ [lo, hi]} |F(x) − G(x)|` for monotone `F`, `G` that are
/// piecewise constant or continuous between their breakpoints.
///
/// Checking values and left limits at every breakpoint and at the interval
/// ends is exact: between breakpoints one side is constant and the other
/// monotone, so the extreme sits at an end.
pub fn sup_distance(a: &dyn Cdf, b: &dyn Cdf, lo: f64, hi: f64) -> f64 {
    let mut pts: Vec<f64> = a.breakpoints();
    pts.extend(b.breakpoints());
    pts.retain(|x| *x >= lo && *x <= hi);
    pts.push(lo);
    pts.push(hi);
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let mut best: f64 = 0.0;
    for x in pts {
        best = best.max((a.value(x) - b.value(x)).abs());
        if x > lo {
            best = best.max((a.left_limit(x) - b.left_limit(x)).abs());
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn staircase_basics() {
        let s = SpectralStaircase::new(vec![0.0, 0.0, 1.0], 3, 1e-8);
        assert!((s.value(0.0) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(s.value(1.0), 1.0);
        assert_eq!(s.value(-0.5), 0.0);
        assert_eq!(s.left_limit(0.0), 0.0);
        assert_eq!(s.jumps.len(), 2);
        assert_eq!(s.jumps[0].multiplicity, 2);
        assert!((s.jumps[0].mass - 2.0 / 3.0).abs() < 1e-15);
        let spread = SpectralStaircase::new(vec![0.0, 1.0, 2.0, 3.0], 4, 1e-8);
        assert_eq!(spread.jumps.len(), 4);
        assert!(spread.jumps.iter().all(|j| j.mass == 0.25));
    }

    #[test]
    fn merge_tolerance_fuses_clusters() {
        let s = SpectralStaircase::new(vec![1.0, 1.0 + 1e-10, 1.0 + 2e-10, 2.0], 4, 1e-8);
        assert_eq!(s.jumps.len(), 2);
        assert_eq!(s.jumps[0].multiplicity, 3);
        assert!(s.jump_near(1.0, 1e-8).is_some());
        assert_eq!(s.atoms(0.5).len(), 1);
    }

    #[test]
    fn sup_distance_cases() {
        let s = SpectralStaircase::new(vec![0.5, 1.5, 2.5], 3, 1e-8);
        assert_eq!(sup_distance(&s, &s, 0.0, 4.0), 0.0);
        let a = SpectralStaircase::new(vec![0.0], 1, 1e-8);
        let b = SpectralStaircase::new(vec![1.0], 1, 1e-8);
        assert_eq!(sup_distance(&a, &b, 0.0, 1.0), 1.0);
        // uniform cdf on [0,1] vs a single step at 1/2 differs by 1/2
        let u = AnalyticCdf::new("uniform", |x| x.clamp(0.0, 1.0));
        let half = SpectralStaircase::new(vec![0.5], 1, 1e-8);
        assert!((sup_distance(&u, &half, 0.0, 1.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn csv_lists_distinct_breakpoints() {
        let s = SpectralStaircase::new(vec![0.0, 0.0, 1.0], 3, 1e-8);
        let csv = s.to_csv();
        assert_eq!(csv.lines().count(), 3);
        assert!(csv.lines().nth(2).unwrap().ends_with("1.000000000000e0"));
    }
}
