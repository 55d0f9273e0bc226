//! Two-way capacity bounds, the Feasibility metric, and Feasible-Region
//! boundaries for the three duplex paradigms, with a dominance check that
//! mechanizes the region-nesting comparison.
//!
//! The theory frontiers follow the classical two-way constructions: the
//! FDD/TDD inner bound is the time-sharing segment between the two
//! single-direction capacities (self-interference avoided by orthogonal
//! resources), and the IBFD outer bound is the rectangle whose sides are
//! the per-direction capacities with self-interference removed. SDD shares
//! the IBFD rectangle in rate space; its advantage enters through coding
//! efficiency, not capacity. Mapping a rate frontier into Feasibility
//! space divides the effective deliverable rate `eta * r_chan` by the
//! minimum of the two source coding rates.
//!
//! Efficiency has an analytic mode (the [`EfficiencyModel`] factors) and
//! an empirical mode that takes measured `(rate, success)` pairs from the
//! harness; the empirical path is the scientifically primary one, the
//! analytic defaults merely keep theory charts generatable without a
//! sweep.
//!
//! Rate conversions used by the empirical mode: the separate-coding chain
//! delivers `k_msg` payload bits over `n_tx / 2` QPSK symbols, so its
//! source rate is `2 * k_msg / n_tx` bits per channel symbol; the semantic
//! chain maps one patch to `k_symbols` channel symbols, counted as
//! `2 * k_symbols` bits per patch at QPSK spectral loading so both chains
//! are comparable under the same bandwidth overhead.

use alloc::vec::Vec;

use crate::channel::LinkBudget;
use crate::math;

/// dB value standing in for "minus infinity" (vanishing power).
pub const NEG_INF_DB: f64 = -300.0;

/// The three duplex paradigms compared throughout the crate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Paradigm {
    FddTdd,
    Ibfd,
    Sdd,
}

impl Paradigm {
    pub const ALL: [Paradigm; 3] = [Paradigm::FddTdd, Paradigm::Ibfd, Paradigm::Sdd];

    /// Stable label used in CSV artifacts and config files.
    pub fn label(&self) -> &'static str {
        match self {
            Paradigm::FddTdd => "FDD_TDD",
            Paradigm::Ibfd => "IBFD",
            Paradigm::Sdd => "SDD",
        }
    }

    pub fn parse(s: &str) -> Option<Paradigm> {
        match s {
            "FDD_TDD" | "fdd_tdd" => Some(Paradigm::FddTdd),
            "IBFD" | "ibfd" => Some(Paradigm::Ibfd),
            "SDD" | "sdd" => Some(Paradigm::Sdd),
            _ => None,
        }
    }
}

impl core::fmt::Display for Paradigm {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.label())
    }
}

/// Channel transmission rates and source coding rates for both directions,
/// all in bits per channel symbol.
#[derive(Clone, Copy, Debug)]
pub struct DirectionalRates {
    pub r_chan_ab: f64,
    pub r_chan_ba: f64,
    pub r_src_ab: f64,
    pub r_src_ba: f64,
}

/// A point in Feasibility space (dimensionless rate ratios).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FeasibilityPoint {
    pub f_ab: f64,
    pub f_ba: f64,
}

/// An achievable frontier: a polyline in Feasibility space (or rate space
/// for [`rate_region`]) with `f_ba` non-decreasing and `f_ab`
/// non-increasing along the vertex order. The achievable region is the
/// downward closure of the polyline.
#[derive(Clone, Debug)]
pub struct RegionBoundary {
    pub paradigm: Paradigm,
    pub vertices: Vec<FeasibilityPoint>,
}

impl RegionBoundary {
    /// Check the frontier shape invariants.
    pub fn is_valid(&self) -> bool {
        if self.vertices.is_empty() {
            return false;
        }
        let mut ok = self
            .vertices
            .iter()
            .all(|v| v.f_ab >= 0.0 && v.f_ba >= 0.0 && v.f_ab.is_finite() && v.f_ba.is_finite());
        for w in self.vertices.windows(2) {
            ok &= w[1].f_ba >= w[0].f_ba - 1e-12;
            ok &= w[1].f_ab <= w[0].f_ab + 1e-12;
        }
        ok
    }

    /// Largest first coordinate achievable at ordinate `y` (piecewise-
    /// linear interpolation on the frontier, downward closure below the
    /// first vertex). `None` when `y` exceeds the frontier's reach.
    fn max_x_at_y(&self, y: f64) -> Option<f64> {
        let eps = 1e-12;
        let last = self.vertices.last().unwrap();
        if y > last.f_ba + eps {
            return None;
        }
        if y <= self.vertices[0].f_ba + eps {
            return Some(self.vertices[0].f_ab);
        }
        let mut best: Option<f64> = None;
        for w in self.vertices.windows(2) {
            let (p, q) = (w[0], w[1]);
            if y >= p.f_ba - eps && y <= q.f_ba + eps {
                let x = if (q.f_ba - p.f_ba).abs() <= eps {
                    p.f_ab.max(q.f_ab)
                } else {
                    let t = ((y - p.f_ba) / (q.f_ba - p.f_ba)).clamp(0.0, 1.0);
                    p.f_ab + t * (q.f_ab - p.f_ab)
                };
                best = Some(best.map_or(x, |b: f64| b.max(x)));
            }
        }
        best
    }
}

/// Coding-efficiency factors and the residual self-interference level
/// (in dB relative to the noise floor) used for the IBFD/SDD capacity.
///
/// The default residual is the "minus infinity" proxy: the theoretical
/// outer bound assumes self-interference can be entirely eliminated, and
/// the canonical region-nesting picture only holds in that limit (any
/// positive residual pulls the IBFD rectangle strictly inside the no-SI
/// time-sharing endpoints). Finite values are available to study degraded
/// regions.
#[derive(Clone, Copy, Debug)]
pub struct EfficiencyModel {
    /// Separate source/channel coding efficiency (FDD/TDD and IBFD).
    pub eta_sep: f64,
    /// JSCC coding efficiency (SDD).
    pub eta_jscc: f64,
    /// Post-SIC residual SI in dB relative to noise; `<= NEG_INF_DB`
    /// means perfect cancellation.
    pub residual_si_db: f64,
}

impl Default for EfficiencyModel {
    fn default() -> Self {
        Self {
            eta_sep: 0.75,
            eta_jscc: 0.95,
            residual_si_db: NEG_INF_DB,
        }
    }
}

impl EfficiencyModel {
    /// # Panics
    /// Panics unless `0 < eta_sep <= eta_jscc <= 1`.
    pub fn validate(&self) {
        assert!(
            self.eta_sep > 0.0 && self.eta_sep <= self.eta_jscc && self.eta_jscc <= 1.0,
            "efficiency factors must satisfy 0 < eta_sep <= eta_jscc <= 1"
        );
    }

    fn eta(&self, paradigm: Paradigm) -> f64 {
        match paradigm {
            Paradigm::FddTdd | Paradigm::Ibfd => self.eta_sep,
            Paradigm::Sdd => self.eta_jscc,
        }
    }
}

/// AWGN channel capacity `log2(1 + 10^(snr_db/10))` in bits per symbol.
pub fn awgn_capacity(snr_db: f64) -> f64 {
    assert!(snr_db.is_finite(), "SNR must be finite (use a large negative proxy)");
    math::log2(1.0 + math::db_to_lin(snr_db))
}

/// Per-direction capacity of a link budget with the residual-SI level
/// from the efficiency model folded into the noise.
fn capacity_with_residual(budget: &LinkBudget, em: &EfficiencyModel) -> f64 {
    let snr0_db = budget.desired_snr_db();
    if em.residual_si_db <= NEG_INF_DB {
        return awgn_capacity(snr0_db);
    }
    // residual power relative to noise: SINR = SNR / (1 + r)
    let r = math::db_to_lin(em.residual_si_db);
    awgn_capacity(snr0_db - math::lin_to_db(1.0 + r))
}

fn check_budget(budget: &LinkBudget) {
    assert!(
        budget.desired_snr_db().is_finite() && budget.noise_floor_dbm.is_finite(),
        "link budget must produce finite powers"
    );
}

/// Rate-space frontier of a paradigm (coordinates are bits per symbol,
/// carried in the [`FeasibilityPoint`] fields).
///
/// FDD/TDD: the time-sharing segment `{(alpha*C_ab0, (1-alpha)*C_ba0)}`
/// sampled at `n_points` values of alpha (no self-interference). IBFD and
/// SDD: the rectangle frontier at the residual-SI-degraded capacities
/// (three vertices; coding efficiency does not enter rate space).
///
/// # Panics
/// Panics if `n_points < 2`, the efficiency model is invalid, or a budget
/// is degenerate.
pub fn rate_region(
    paradigm: Paradigm,
    budget_ab: &LinkBudget,
    budget_ba: &LinkBudget,
    em: &EfficiencyModel,
    n_points: usize,
) -> RegionBoundary {
    assert!(n_points >= 2, "a frontier needs at least two points");
    em.validate();
    check_budget(budget_ab);
    check_budget(budget_ba);
    let vertices = match paradigm {
        Paradigm::FddTdd => {
            let c_ab = awgn_capacity(budget_ab.desired_snr_db());
            let c_ba = awgn_capacity(budget_ba.desired_snr_db());
            time_share_vertices(c_ab, c_ba, n_points)
        }
        Paradigm::Ibfd | Paradigm::Sdd => {
            let c_ab = capacity_with_residual(budget_ab, em);
            let c_ba = capacity_with_residual(budget_ba, em);
            rectangle_vertices(c_ab, c_ba)
        }
    };
    RegionBoundary { paradigm, vertices }
}

fn time_share_vertices(r_ab: f64, r_ba: f64, n_points: usize) -> Vec<FeasibilityPoint> {
    (0..n_points)
        .map(|i| {
            // alpha descends from 1 to 0 so f_ba increases along the line
            let alpha = 1.0 - i as f64 / (n_points - 1) as f64;
            FeasibilityPoint {
                f_ab: alpha * r_ab,
                f_ba: (1.0 - alpha) * r_ba,
            }
        })
        .collect()
}

fn rectangle_vertices(r_ab: f64, r_ba: f64) -> Vec<FeasibilityPoint> {
    alloc::vec![
        FeasibilityPoint { f_ab: r_ab, f_ba: 0.0 },
        FeasibilityPoint { f_ab: r_ab, f_ba: r_ba },
        FeasibilityPoint { f_ab: 0.0, f_ba: r_ba },
    ]
}

/// The Feasibility metric: both channel rates divided by the minimum of
/// the two source coding rates.
///
/// # Panics
/// Panics when `min(r_src_ab, r_src_ba) <= 0` or any rate is negative.
pub fn feasibility_point(dr: &DirectionalRates) -> FeasibilityPoint {
    assert!(
        dr.r_chan_ab >= 0.0 && dr.r_chan_ba >= 0.0 && dr.r_src_ab >= 0.0 && dr.r_src_ba >= 0.0,
        "rates must be nonnegative"
    );
    let min_src = dr.r_src_ab.min(dr.r_src_ba);
    assert!(min_src > 0.0, "minimum source rate must be positive");
    FeasibilityPoint {
        f_ab: dr.r_chan_ab / min_src,
        f_ba: dr.r_chan_ba / min_src,
    }
}

/// Feasible-Region boundary of a paradigm under the analytic efficiency
/// model: the rate frontier scaled by the paradigm's `eta` and divided by
/// the minimum source rate.
///
/// # Panics
/// As [`rate_region`], plus the [`feasibility_point`] preconditions.
pub fn feasible_region(
    paradigm: Paradigm,
    budget_ab: &LinkBudget,
    budget_ba: &LinkBudget,
    em: &EfficiencyModel,
    src_rates: (f64, f64),
    n_points: usize,
) -> RegionBoundary {
    let rates = rate_region(paradigm, budget_ab, budget_ba, em, n_points);
    let eta = em.eta(paradigm);
    scale_into_feasibility(rates, eta, src_rates)
}

/// Effective deliverable rate from measured `(rate, success)` pairs: the
/// best rate-weighted success product. This is the empirical substitute
/// for `eta * capacity`.
///
/// # Panics
/// Panics on an empty measurement set or values outside their domains.
pub fn effective_rate(measured: &[(f64, f64)]) -> f64 {
    assert!(!measured.is_empty(), "need at least one measurement");
    measured
        .iter()
        .map(|&(rate, success)| {
            assert!(rate >= 0.0, "rates must be nonnegative");
            assert!((0.0..=1.0).contains(&success), "success must be a fraction");
            rate * success
        })
        .fold(0.0, f64::max)
}

/// Feasible-Region boundary from harness measurements instead of the
/// analytic efficiency factors: per-direction effective rates are taken
/// from `(rate, success)` pairs measured at the paradigm's operating
/// point.
///
/// # Panics
/// As [`effective_rate`] and [`feasibility_point`]; `n_points >= 2`.
pub fn feasible_region_empirical(
    paradigm: Paradigm,
    measured_ab: &[(f64, f64)],
    measured_ba: &[(f64, f64)],
    src_rates: (f64, f64),
    n_points: usize,
) -> RegionBoundary {
    assert!(n_points >= 2, "a frontier needs at least two points");
    let r_ab = effective_rate(measured_ab);
    let r_ba = effective_rate(measured_ba);
    let vertices = match paradigm {
        Paradigm::FddTdd => time_share_vertices(r_ab, r_ba, n_points),
        Paradigm::Ibfd | Paradigm::Sdd => rectangle_vertices(r_ab, r_ba),
    };
    scale_into_feasibility(RegionBoundary { paradigm, vertices }, 1.0, src_rates)
}

fn scale_into_feasibility(
    rates: RegionBoundary,
    eta: f64,
    src_rates: (f64, f64),
) -> RegionBoundary {
    let vertices = rates
        .vertices
        .iter()
        .map(|v| {
            feasibility_point(&DirectionalRates {
                r_chan_ab: eta * v.f_ab,
                r_chan_ba: eta * v.f_ba,
                r_src_ab: src_rates.0,
                r_src_ba: src_rates.1,
            })
        })
        .collect();
    RegionBoundary {
        paradigm: rates.paradigm,
        vertices,
    }
}

/// True iff region `a` covers region `b`: every vertex of `b` lies within
/// the downward closure of `a`'s frontier (piecewise-linear interpolation,
/// 1e-12 slack for shared edges).
pub fn dominates(a: &RegionBoundary, b: &RegionBoundary) -> bool {
    debug_assert!(a.is_valid() && b.is_valid(), "boundaries must be valid frontiers");
    b.vertices.iter().all(|v| {
        a.max_x_at_y(v.f_ba)
            .is_some_and(|x| x + 1e-12 >= v.f_ab)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn budget(tx_dbm: f64) -> LinkBudget {
        LinkBudget {
            tx_power_dbm: tx_dbm,
            carrier_hz: 2.9e9,
            distance_m: 25.0,
            path_loss_exponent: 2.0,
            si_isolation_db: 40.0,
            noise_floor_dbm: -90.0,
        }
    }

    #[test]
    fn capacity_anchors() {
        // [TRIVIAL] log2(2) at 0 dB, vanishing at the -inf proxy
        assert_eq!(awgn_capacity(0.0), 1.0);
        assert!(awgn_capacity(-300.0) < 1e-9);
        // [DERIVED] log2(1 + 31.6228) evaluated independently
        assert!((awgn_capacity(15.0) - 5.0278).abs() < 0.001);
    }

    #[test]
    fn fdd_time_sharing_midpoint() {
        // [TRIVIAL: time-sharing] alpha = 0.5 on symmetric budgets
        let b = budget(20.0);
        let r = rate_region(Paradigm::FddTdd, &b, &b, &EfficiencyModel::default(), 3);
        let c0 = awgn_capacity(b.desired_snr_db());
        let mid = r.vertices[1];
        assert!((mid.f_ab - c0 / 2.0).abs() < 1e-12);
        assert!((mid.f_ba - c0 / 2.0).abs() < 1e-12);
        assert!(r.is_valid());
    }

    #[test]
    fn ibfd_residual_degrades_capacity() {
        // [TRIVIAL: SINR monotonicity] residual > 0 -> strictly inside
        let b = budget(20.0);
        let em_perfect = EfficiencyModel::default();
        let em_resid = EfficiencyModel {
            residual_si_db: 10.0,
            ..EfficiencyModel::default()
        };
        let outer = rate_region(Paradigm::Ibfd, &b, &b, &em_perfect, 2);
        let degraded = rate_region(Paradigm::Ibfd, &b, &b, &em_resid, 2);
        let c0 = awgn_capacity(b.desired_snr_db());
        assert!((outer.vertices[1].f_ab - c0).abs() < 1e-12);
        assert!(degraded.vertices[1].f_ab < outer.vertices[1].f_ab);
        assert!(degraded.vertices[1].f_ba < outer.vertices[1].f_ba);
    }

    #[test]
    fn residual_monotonicity() {
        // increasing residual never increases any frontier coordinate
        let b = budget(20.0);
        let mut prev = f64::INFINITY;
        for r_db in [-300.0, -20.0, -10.0, 0.0, 10.0, 20.0] {
            let em = EfficiencyModel {
                residual_si_db: r_db,
                ..EfficiencyModel::default()
            };
            let reg = rate_region(Paradigm::Ibfd, &b, &b, &em, 2);
            let corner = reg.vertices[1].f_ab;
            assert!(corner <= prev + 1e-12, "capacity rose with residual");
            prev = corner;
        }
    }

    #[test]
    fn feasibility_point_definition() {
        // [TRIVIAL: definition]
        let p = feasibility_point(&DirectionalRates {
            r_chan_ab: 2.0,
            r_chan_ba: 2.0,
            r_src_ab: 1.0,
            r_src_ba: 1.5,
        });
        assert_eq!(p.f_ab, 2.0);
        assert_eq!(p.f_ba, 2.0);
        let z = feasibility_point(&DirectionalRates {
            r_chan_ab: 0.0,
            r_chan_ba: 1.0,
            r_src_ab: 1.0,
            r_src_ba: 1.0,
        });
        assert_eq!(z.f_ab, 0.0);
    }

    #[test]
    #[should_panic(expected = "minimum source rate must be positive")]
    fn zero_source_rate_rejected() {
        let _ = feasibility_point(&DirectionalRates {
            r_chan_ab: 1.0,
            r_chan_ba: 1.0,
            r_src_ab: 0.0,
            r_src_ba: 1.0,
        });
    }

    #[test]
    fn degenerate_efficiency_collapses_sdd_to_ibfd() {
        // [TRIVIAL: degenerate efficiency]
        let b = budget(20.0);
        let em = EfficiencyModel {
            eta_sep: 0.8,
            eta_jscc: 0.8,
            ..EfficiencyModel::default()
        };
        let sdd = feasible_region(Paradigm::Sdd, &b, &b, &em, (1.0, 1.0), 5);
        let ibfd = feasible_region(Paradigm::Ibfd, &b, &b, &em, (1.0, 1.0), 5);
        for (s, i) in sdd.vertices.iter().zip(&ibfd.vertices) {
            assert_eq!(s.f_ab, i.f_ab);
            assert_eq!(s.f_ba, i.f_ba);
        }
    }

    #[test]
    fn sdd_vertices_pointwise_dominate_ibfd() {
        // [TRIVIAL: monotone scaling]
        let b = budget(20.0);
        let em = EfficiencyModel::default();
        let sdd = feasible_region(Paradigm::Sdd, &b, &b, &em, (1.0, 1.0), 5);
        let ibfd = feasible_region(Paradigm::Ibfd, &b, &b, &em, (1.0, 1.0), 5);
        for (s, i) in sdd.vertices.iter().zip(&ibfd.vertices) {
            assert!(s.f_ab >= i.f_ab && s.f_ba >= i.f_ba);
        }
    }

    #[test]
    fn default_region_nesting() {
        // [DERIVED: Fig.-4-ordering analog] FDD_TDD <= IBFD <= SDD under
        // the default efficiency model, asymmetric budgets included
        for (ta, tb) in [(20.0, 20.0), (20.0, 14.0)] {
            let ba = budget(ta);
            let bb = budget(tb);
            let em = EfficiencyModel::default();
            let fdd = feasible_region(Paradigm::FddTdd, &ba, &bb, &em, (1.0, 1.0), 33);
            let ibfd = feasible_region(Paradigm::Ibfd, &ba, &bb, &em, (1.0, 1.0), 33);
            let sdd = feasible_region(Paradigm::Sdd, &ba, &bb, &em, (1.0, 1.0), 33);
            assert!(fdd.is_valid() && ibfd.is_valid() && sdd.is_valid());
            assert!(dominates(&ibfd, &fdd), "IBFD must cover FDD_TDD");
            assert!(dominates(&sdd, &ibfd), "SDD must cover IBFD");
            assert!(dominates(&sdd, &fdd));
            // and the order is strict somewhere
            assert!(!dominates(&ibfd, &sdd));
        }
    }

    #[test]
    fn dominance_axioms() {
        let rect = |c: f64| RegionBoundary {
            paradigm: Paradigm::Ibfd,
            vertices: rectangle_vertices(c, c),
        };
        // [TRIVIAL: reflexivity and scaling]
        assert!(dominates(&rect(1.0), &rect(1.0)));
        assert!(dominates(&rect(2.0), &rect(1.0)));
        assert!(!dominates(&rect(1.0), &rect(2.0)));
        // disjointly better in one direction only -> false both ways
        let tall = RegionBoundary {
            paradigm: Paradigm::Ibfd,
            vertices: rectangle_vertices(1.0, 2.0),
        };
        let wide = RegionBoundary {
            paradigm: Paradigm::Ibfd,
            vertices: rectangle_vertices(2.0, 1.0),
        };
        assert!(!dominates(&tall, &wide));
        assert!(!dominates(&wide, &tall));
    }

    #[test]
    fn empirical_region_uses_best_measured_product() {
        // effective rate = max rate*success
        assert_eq!(effective_rate(&[(2.0, 0.5), (1.5, 0.9)]), 1.35);
        let sdd = feasible_region_empirical(
            Paradigm::Sdd,
            &[(2.0, 0.9)],
            &[(2.0, 0.8)],
            (1.0, 1.0),
            2,
        );
        assert_eq!(sdd.vertices[1].f_ab, 1.8);
        assert_eq!(sdd.vertices[1].f_ba, 1.6);
        let fdd = feasible_region_empirical(
            Paradigm::FddTdd,
            &[(2.0, 0.9)],
            &[(2.0, 0.8)],
            (1.0, 1.0),
            5,
        );
        assert!(fdd.is_valid());
        assert!(dominates(&sdd, &fdd));
    }

    #[test]
    fn paradigm_labels_round_trip() {
        for p in Paradigm::ALL {
            assert_eq!(Paradigm::parse(p.label()), Some(p));
        }
        assert_eq!(Paradigm::parse("nonsense"), None);
    }

    proptest! {
        #[test]
        fn feasibility_homogeneity(c in 0.05f64..20.0, ra in 0.0f64..8.0, rb in 0.0f64..8.0) {
            // [TRIVIAL: homogeneity] scaling both source rates by c scales
            // both Feasibilities by 1/c
            let base = DirectionalRates { r_chan_ab: ra, r_chan_ba: rb, r_src_ab: 1.0, r_src_ba: 2.0 };
            let scaled = DirectionalRates { r_src_ab: c, r_src_ba: 2.0 * c, ..base };
            let p0 = feasibility_point(&base);
            let p1 = feasibility_point(&scaled);
            prop_assert!((p1.f_ab - p0.f_ab / c).abs() <= 1e-9 * (1.0 + p0.f_ab));
            prop_assert!((p1.f_ba - p0.f_ba / c).abs() <= 1e-9 * (1.0 + p0.f_ba));
        }

        #[test]
        fn time_share_line_is_the_inner_bound(n in 2usize..40, snr_ab in -5.0f64..40.0, snr_ba in -5.0f64..40.0) {
            // frontier endpoints are the single-direction capacities and
            // every vertex sits on the segment between them
            let c_ab = awgn_capacity(snr_ab);
            let c_ba = awgn_capacity(snr_ba);
            let verts = time_share_vertices(c_ab, c_ba, n);
            prop_assert!((verts[0].f_ab - c_ab).abs() < 1e-12 && verts[0].f_ba == 0.0);
            let last = verts[n - 1];
            prop_assert!(last.f_ab.abs() < 1e-12 && (last.f_ba - c_ba).abs() < 1e-12);
            for v in &verts {
                let s = v.f_ab / c_ab + v.f_ba / c_ba;
                prop_assert!((s - 1.0).abs() < 1e-9);
            }
        }
    }
}
