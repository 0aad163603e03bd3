//! Composite-Simpson panel quadrature shared by the numerical oracles.
//!
//! Grids are built from explicit breakpoints so that every kink or jump of
//! the integrand (ball boundaries, uniform-support edges, shift positions)
//! lands exactly on a panel edge; inside each panel the integrands are
//! smooth and composite Simpson converges at fourth order. Panel-edge nodes
//! are nudged one part in 1e9 of an interval into their panel, so integrands
//! with jump discontinuities at breakpoints are always sampled on the
//! correct side.

/// Flat node/weight arrays; panel-edge nodes appear once per adjacent panel,
/// each carrying its own weight share, so plain dot products integrate.
#[derive(Debug, Clone)]
pub(crate) struct PanelGrid {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl PanelGrid {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| f(x) * w)
            .sum()
    }
}

/// Build a composite-Simpson grid over `[breaks[0], breaks.last()]` with
/// panel edges at every breakpoint and roughly `total_nodes` nodes overall,
/// distributed proportionally to panel length (minimum 4 intervals each).
pub(crate) fn simpson_panels(breaks: &[f64], total_nodes: usize) -> PanelGrid {
    let mut bs: Vec<f64> = breaks.iter().cloned().filter(|x| x.is_finite()).collect();
    bs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    bs.dedup();
    assert!(bs.len() >= 2, "need at least two distinct breakpoints");

    let total_len: f64 = bs.last().unwrap() - bs[0];
    let mut nodes = Vec::with_capacity(total_nodes + 8 * bs.len());
    let mut weights = Vec::with_capacity(total_nodes + 8 * bs.len());
    for pair in bs.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let len = b - a;
        if len <= 0.0 {
            continue;
        }
        let share = if total_len > 0.0 {
            len / total_len
        } else {
            1.0
        };
        let mut intervals = ((total_nodes as f64 * share).round() as usize).max(4);
        if intervals % 2 == 1 {
            intervals += 1;
        }
        let h = len / intervals as f64;
        let nudge = 1e-9 * h;
        for i in 0..=intervals {
            let x = if i == 0 {
                a + nudge
            } else if i == intervals {
                b - nudge
            } else {
                a + i as f64 * h
            };
            let coef = if i == 0 || i == intervals {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            nodes.push(x);
            weights.push(coef * h / 3.0);
        }
    }
    PanelGrid { nodes, weights }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_polynomials_exactly() {
        // Simpson is exact on cubics (up to the edge nudge).
        let grid = simpson_panels(&[0.0, 0.3, 1.0], 50);
        let got = grid.integrate(|x| 4.0 * x * x * x - x + 2.0);
        assert!((got - (1.0 - 0.5 + 2.0)).abs() < 1e-9);
    }

    #[test]
    fn gaussian_mass_to_high_accuracy() {
        let grid = simpson_panels(&[-10.0, 0.0, 10.0], 20_000);
        let inv = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
        let got = grid.integrate(|x| inv * (-0.5 * x * x).exp());
        assert!((got - 1.0).abs() < 1e-12, "mass {got}");
    }

    #[test]
    fn piecewise_constant_exact_with_aligned_edges() {
        // A box function with edges on panel boundaries integrates exactly
        // because edge nodes are sampled inside their own panel.
        let grid = simpson_panels(&[-2.0, -1.0, 1.0, 2.0], 30);
        let got = grid.integrate(|x| if x.abs() <= 1.0 { 0.5 } else { 0.0 });
        assert!((got - 1.0).abs() < 1e-9);
    }

    #[test]
    fn duplicate_breakpoints_are_harmless() {
        let grid = simpson_panels(&[0.0, 0.5, 0.5, 1.0], 40);
        let got = grid.integrate(|x| x);
        assert!((got - 0.5).abs() < 1e-9);
    }
}
