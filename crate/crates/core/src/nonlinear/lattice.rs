use super::grid::RadialGrid;
use crate::equilibrium::Equilibrium;
use crate::error::{Error, Result};
use std::f64::consts::PI;

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Midpoint lattice in (θ, α) with speed |v| = tan θ, θ ∈ [0, π/2), and
/// polar angle α ∈ (0, π) measured from −r̂: radial velocity u = −|v|cos α,
/// tangential w = |v| sin α. The tangent map covers the algebraic tail of
/// M₀; equal steps in α crowd the nodes towards radial motion, which is
/// what resolves the density near the origin.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VelocityLattice {
    pub n_speed: usize,
    pub n_cos: usize,
}

/// One velocity node: (u, w, ∫dv weight).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VelocityNode {
    pub u: f64,
    pub w: f64,
    pub weight: f64,
}

impl VelocityLattice {
    pub fn new(n_speed: usize, n_cos: usize) -> Result<Self> {
        if n_speed < 2 || n_cos < 2 {
            return Err(Error::InvalidInput("velocity lattice needs at least 2×2 nodes".into()));
        }
        Ok(VelocityLattice { n_speed, n_cos })
    }

    /// Node (a, b) shifted by the fractional offsets (oa, ob) ∈ [0, 1).
    #[inline]
    pub fn node(&self, a: usize, b: usize, oa: f64, ob: f64) -> VelocityNode {
        let dth = 0.5 * PI / self.n_speed as f64;
        let dal = PI / self.n_cos as f64;
        let th = (a as f64 + oa) * dth;
        let al = (b as f64 + ob) * dal;
        let (s, c) = (th.tan(), th.cos());
        VelocityNode {
            u: -s * al.cos(),
            w: s * al.sin(),
            weight: 2.0 * PI * s * s / (c * c) * dth * al.sin() * dal,
        }
    }

    pub fn nodes(&self, oa: f64, ob: f64) -> Vec<VelocityNode> {
        let mut out = Vec::with_capacity(self.n_speed * self.n_cos);
        for a in 0..self.n_speed {
            for b in 0..self.n_cos {
                out.push(self.node(a, b, oa, ob));
            }
        }
        out
    }

    /// Σ weight · M₀ over the centred lattice (should be ≈ 1).
    pub fn background_mass(&self, eq: &Equilibrium) -> f64 {
        Self::mass_of(&self.nodes(0.5, 0.5), eq)
    }

    fn mass_of(nodes: &[VelocityNode], eq: &Equilibrium) -> f64 {
        nodes
            .iter()
            .map(|n| n.weight * eq.radial((n.u * n.u + n.w * n.w).sqrt()))
            .sum()
    }
}

/// Generator coprime to m closest to frac·m (rank-1 lattice rule).
fn generator(m: usize, frac: f64) -> usize {
    let target = (frac * m as f64).round() as usize;
    (0..m)
        .flat_map(|d| [target + d, target.wrapping_sub(d)])
        .find(|&g| g > 0 && g < m && gcd(g, m) == 1)
        .unwrap_or(1)
}

/// Phase-space markers (r, u, w) with Liouville weights: each radial cell
/// holds `m` sub-cells, and sub-cell j carries a copy of the velocity
/// lattice shifted by a rank-1 lattice rule, so that neighbouring sub-cells
/// sample different velocities and the m sub-cells together form a
/// midpoint rule m times finer in each velocity direction.
#[derive(Clone, Debug)]
pub struct PhaseQuadrature {
    pub r: Vec<f64>,
    pub u: Vec<f64>,
    pub w: Vec<f64>,
    pub weight: Vec<f64>,
}

impl PhaseQuadrature {
    /// Off-centre shifts make the rectangle rule first-order accurate at
    /// the θ = π/2 end, so each shifted copy is rescaled to carry unit
    /// background mass.
    pub fn new(grid: &RadialGrid, lattice: &VelocityLattice, m: usize, eq: &Equilibrium) -> Self {
        let h = grid.dr / m as f64;
        let cells = grid.n - 1;
        let cap = cells * m * lattice.n_speed * lattice.n_cos;
        let mut q = PhaseQuadrature {
            r: Vec::with_capacity(cap),
            u: Vec::with_capacity(cap),
            w: Vec::with_capacity(cap),
            weight: Vec::with_capacity(cap),
        };
        let (g1, g2) = (generator(m, 0.618), generator(m, 0.755));
        for c in 0..cells {
            for j in 0..m {
                let r = (c * m + j) as f64 * h + 0.5 * h;
                let vol = 4.0 * PI * (r * r * h + h * h * h / 12.0);
                let oa = ((j * g1) % m) as f64 / m as f64 + 0.5 / m as f64;
                let ob = ((j * g2) % m) as f64 / m as f64 + 0.5 / m as f64;
                let nodes = lattice.nodes(oa, ob);
                let scale = 1.0 / VelocityLattice::mass_of(&nodes, eq);
                for node in nodes {
                    q.r.push(r);
                    q.u.push(node.u);
                    q.w.push(node.w);
                    q.weight.push(vol * node.weight * scale);
                }
            }
        }
        q
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    /// Relative error of Σ w_p M₀(v_p) against the background mass (4π/3)R³.
    pub fn background_mass_error(&self, eq: &Equilibrium, r_max: f64) -> f64 {
        let total: f64 = (0..self.len())
            .map(|p| self.weight[p] * eq.radial((self.u[p].powi(2) + self.w[p].powi(2)).sqrt()))
            .sum();
        let exact = 4.0 * PI / 3.0 * r_max.powi(3);
        (total - exact).abs() / exact
    }
}
