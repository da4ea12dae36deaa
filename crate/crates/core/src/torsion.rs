//! Affine connections with torsion in four dimensions.
//!
//! Index conventions: a connection coefficient `Γ_{μν}^ρ` is stored as
//! `c[mu][nu][rho]`, lower indices first. Torsion is `T_{μν}^ρ = −2 Γ_{[μν]}^ρ`
//! and the contorsion splits a general connection as `Γ = {} + K` with
//!
//! ```text
//! K_{μν}^ρ = ½ g^{ρσ} (T_{μσν} + T_{νσμ} − T_{μνσ}),   T_{μνσ} = T_{μν}^λ g_{λσ}
//! ```
//!
//! which gives `K_{[μν]}^ρ = −½ T_{μν}^ρ` and `K_{μνρ} = −K_{μρν}`.
//!
//! Grid fields sample a quantity on a rectangular 4D lattice. An axis with a
//! single point is treated as a direction of no variation; derivatives use
//! centered differences and are evaluated on interior points only.

use nalgebra::Matrix4;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::numerics::diff::centered;
use crate::par::{self, Execution};

pub const DIM: usize = 4;

pub type Rank2 = [[f64; DIM]; DIM];
pub type Rank3 = [[[f64; DIM]; DIM]; DIM];

/// Smallest admissible `|det g|`.
pub const DEFAULT_DET_THRESHOLD: f64 = 1e-10;
/// Identity residual ceiling used by the randomized suite.
pub const IDENTITY_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("metric not invertible (|det g| = {det:e}) at grid point {point:?}")]
    MetricNotInvertible { det: f64, point: [usize; DIM] },
    #[error("metric is not symmetric (max asymmetry {0:e})")]
    MetricNotSymmetric(f64),
    #[error("torsion is not antisymmetric in its lower indices (max residual {0:e})")]
    TorsionNotAntisymmetric(f64),
    #[error("connection is not symmetric in its lower indices (max residual {0:e})")]
    ConnectionNotSymmetric(f64),
    #[error("axis {axis} has {points} points; differentiated axes need at least {needed}")]
    GridTooSmall {
        axis: usize,
        points: usize,
        needed: usize,
    },
    #[error("invalid grid: {0}")]
    InvalidGrid(&'static str),
}

const ZERO3: Rank3 = [[[0.0; DIM]; DIM]; DIM];

fn max_abs3(a: &Rank3) -> f64 {
    a.iter()
        .flatten()
        .flatten()
        .fold(0.0, |m, v| m.max(v.abs()))
}

/// Metric `g_{μν}` with its cached inverse. Signature convention (−,+,+,+).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Metric {
    g: Rank2,
    inverse: Rank2,
}

impl Metric {
    pub fn new(g: Rank2) -> Result<Self, GeometryError> {
        Self::with_threshold(g, DEFAULT_DET_THRESHOLD)
    }

    pub fn with_threshold(g: Rank2, det_threshold: f64) -> Result<Self, GeometryError> {
        let mut asym = 0.0f64;
        let mut scale = 0.0f64;
        for i in 0..DIM {
            for j in 0..DIM {
                asym = asym.max((g[i][j] - g[j][i]).abs());
                scale = scale.max(g[i][j].abs());
            }
        }
        if asym > 1e-12 * scale.max(1.0) {
            return Err(GeometryError::MetricNotSymmetric(asym));
        }
        let m = Matrix4::from_fn(|i, j| g[i][j]);
        let det = m.determinant();
        if !(det.abs() >= det_threshold) {
            return Err(GeometryError::MetricNotInvertible {
                det,
                point: [0; DIM],
            });
        }
        let inv = m.try_inverse().ok_or(GeometryError::MetricNotInvertible {
            det,
            point: [0; DIM],
        })?;
        let mut inverse = [[0.0; DIM]; DIM];
        for (i, row) in inverse.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = inv[(i, j)];
            }
        }
        Ok(Self { g, inverse })
    }

    pub fn minkowski() -> Self {
        let mut g = [[0.0; DIM]; DIM];
        g[0][0] = -1.0;
        for (i, row) in g.iter_mut().enumerate().skip(1) {
            row[i] = 1.0;
        }
        Self { g, inverse: g }
    }

    pub fn lower(&self) -> &Rank2 {
        &self.g
    }

    pub fn upper(&self) -> &Rank2 {
        &self.inverse
    }
}

/// `Γ_{μν}^ρ`, no symmetry assumed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Connection(pub Rank3);

/// `T_{μν}^ρ`, antisymmetric in `μν`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Torsion(Rank3);

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Contorsion {
    /// `K_{μν}^ρ`
    pub mixed: Rank3,
    /// `K_{μνρ}` with the last index lowered by the metric.
    pub lowered: Rank3,
}

/// `R_{μν}`, not necessarily symmetric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Ricci(pub Rank2);

impl Connection {
    pub fn zero() -> Self {
        Connection(ZERO3)
    }

    /// Largest `|Γ_{μν}^ρ − Γ_{νμ}^ρ|`.
    pub fn asymmetry(&self) -> f64 {
        let c = &self.0;
        let mut m = 0.0f64;
        for mu in 0..DIM {
            for nu in 0..DIM {
                for rho in 0..DIM {
                    m = m.max((c[mu][nu][rho] - c[nu][mu][rho]).abs());
                }
            }
        }
        m
    }

    pub fn max_abs_diff(&self, other: &Connection) -> f64 {
        let mut m = 0.0f64;
        for (a, b) in self
            .0
            .iter()
            .flatten()
            .flatten()
            .zip(other.0.iter().flatten().flatten())
        {
            m = m.max((a - b).abs());
        }
        m
    }
}

impl Torsion {
    /// Validates antisymmetry to round-off relative to the largest entry.
    pub fn new(t: Rank3) -> Result<Self, GeometryError> {
        let scale = max_abs3(&t).max(1.0);
        let mut residual = 0.0f64;
        for mu in 0..DIM {
            for nu in 0..DIM {
                for rho in 0..DIM {
                    residual = residual.max((t[mu][nu][rho] + t[nu][mu][rho]).abs());
                }
            }
        }
        if residual > 1e-12 * scale {
            return Err(GeometryError::TorsionNotAntisymmetric(residual));
        }
        Ok(Torsion(t))
    }

    pub fn components(&self) -> &Rank3 {
        &self.0
    }

    /// `T_{μνσ} = T_{μν}^λ g_{λσ}`.
    pub fn lowered(&self, g: &Metric) -> Rank3 {
        let mut out = ZERO3;
        let gl = g.lower();
        for mu in 0..DIM {
            for nu in 0..DIM {
                for sigma in 0..DIM {
                    out[mu][nu][sigma] = (0..DIM).map(|l| self.0[mu][nu][l] * gl[l][sigma]).sum();
                }
            }
        }
        out
    }
}

/// Symmetric and antisymmetric parts in the lower index pair.
pub fn split_connection(gamma: &Connection) -> (Connection, Connection) {
    let c = &gamma.0;
    let mut sym = ZERO3;
    let mut anti = ZERO3;
    for mu in 0..DIM {
        for nu in 0..DIM {
            for rho in 0..DIM {
                sym[mu][nu][rho] = 0.5 * (c[mu][nu][rho] + c[nu][mu][rho]);
                anti[mu][nu][rho] = 0.5 * (c[mu][nu][rho] - c[nu][mu][rho]);
            }
        }
    }
    (Connection(sym), Connection(anti))
}

/// `T_{μν}^ρ = −2 Γ_{[μν]}^ρ = Γ_{νμ}^ρ − Γ_{μν}^ρ`.
pub fn torsion_from_connection(gamma: &Connection) -> Torsion {
    let c = &gamma.0;
    let mut t = ZERO3;
    for mu in 0..DIM {
        for nu in 0..DIM {
            for rho in 0..DIM {
                t[mu][nu][rho] = c[nu][mu][rho] - c[mu][nu][rho];
            }
        }
    }
    Torsion(t)
}

pub fn contorsion_from_torsion(t: &Torsion, g: &Metric) -> Contorsion {
    let tl = t.lowered(g);
    let gu = g.upper();
    let gl = g.lower();
    let mut mixed = ZERO3;
    for mu in 0..DIM {
        for nu in 0..DIM {
            for rho in 0..DIM {
                mixed[mu][nu][rho] = 0.5
                    * (0..DIM)
                        .map(|s| gu[rho][s] * (tl[mu][s][nu] + tl[nu][s][mu] - tl[mu][nu][s]))
                        .sum::<f64>();
            }
        }
    }
    let mut lowered = ZERO3;
    for mu in 0..DIM {
        for nu in 0..DIM {
            for rho in 0..DIM {
                lowered[mu][nu][rho] = (0..DIM).map(|l| mixed[mu][nu][l] * gl[l][rho]).sum();
            }
        }
    }
    Contorsion { mixed, lowered }
}

/// `Γ = {} + K`. The first argument must be symmetric in its lower indices.
pub fn assemble_connection(
    christoffel: &Connection,
    k: &Contorsion,
) -> Result<Connection, GeometryError> {
    let asym = christoffel.asymmetry();
    if asym > 1e-12 * max_abs3(&christoffel.0).max(1.0) {
        return Err(GeometryError::ConnectionNotSymmetric(asym));
    }
    let mut out = christoffel.0;
    for (o, kv) in out
        .iter_mut()
        .flatten()
        .flatten()
        .zip(k.mixed.iter().flatten().flatten())
    {
        *o += kv;
    }
    Ok(Connection(out))
}

/// Inverse of [`assemble_connection`]: the torsion of `Γ` fixes `K`, and
/// `Γ − K` is the symmetric remainder (the Christoffel symbols when `Γ` is
/// metric compatible).
pub fn decompose_connection(gamma: &Connection, g: &Metric) -> (Connection, Contorsion) {
    let k = contorsion_from_torsion(&torsion_from_connection(gamma), g);
    let mut sym = gamma.0;
    for (s, kv) in sym
        .iter_mut()
        .flatten()
        .flatten()
        .zip(k.mixed.iter().flatten().flatten())
    {
        *s -= kv;
    }
    // Γ_{[μν]} and K_{[μν]} cancel analytically; remove the round-off.
    let (sym, _) = split_connection(&Connection(sym));
    (sym, k)
}

/// Only the quadratic terms of the Ricci tensor,
/// `Γ_{μν}^ρ Γ_{ρτ}^τ − Γ_{μρ}^τ Γ_{ντ}^ρ`; exact for a constant connection.
pub fn ricci_quadratic(gamma: &Connection) -> Ricci {
    let c = &gamma.0;
    let mut trace = [0.0; DIM];
    for (rho, t) in trace.iter_mut().enumerate() {
        *t = (0..DIM).map(|tau| c[rho][tau][tau]).sum();
    }
    let mut r = [[0.0; DIM]; DIM];
    for mu in 0..DIM {
        for nu in 0..DIM {
            let mut v = 0.0;
            for rho in 0..DIM {
                v += c[mu][nu][rho] * trace[rho];
                for tau in 0..DIM {
                    v -= c[mu][rho][tau] * c[nu][tau][rho];
                }
            }
            r[mu][nu] = v;
        }
    }
    Ricci(r)
}

/// Rectangular lattice: `shape[a]` points along axis `a`, spaced `spacing[a]`,
/// starting at `origin[a]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grid {
    pub shape: [usize; DIM],
    pub spacing: [f64; DIM],
    pub origin: [f64; DIM],
}

impl Grid {
    pub fn new(
        shape: [usize; DIM],
        spacing: [f64; DIM],
        origin: [f64; DIM],
    ) -> Result<Self, GeometryError> {
        if shape.contains(&0) {
            return Err(GeometryError::InvalidGrid(
                "every axis needs at least one point",
            ));
        }
        for a in 0..DIM {
            if shape[a] > 1 && !(spacing[a] > 0.0 && spacing[a].is_finite()) {
                return Err(GeometryError::InvalidGrid("spacing must be positive"));
            }
        }
        Ok(Self {
            shape,
            spacing,
            origin,
        })
    }

    /// A line along one axis; every other axis is a single point at 0.
    pub fn line(
        axis: usize,
        points: usize,
        start: f64,
        spacing: f64,
    ) -> Result<Self, GeometryError> {
        let mut shape = [1; DIM];
        let mut h = [1.0; DIM];
        let mut origin = [0.0; DIM];
        shape[axis] = points;
        h[axis] = spacing;
        origin[axis] = start;
        Self::new(shape, h, origin)
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn flat_index(&self, p: [usize; DIM]) -> usize {
        ((p[0] * self.shape[1] + p[1]) * self.shape[2] + p[2]) * self.shape[3] + p[3]
    }

    pub fn point(&self, mut flat: usize) -> [usize; DIM] {
        let mut p = [0; DIM];
        for a in (0..DIM).rev() {
            p[a] = flat % self.shape[a];
            flat /= self.shape[a];
        }
        p
    }

    pub fn coords(&self, p: [usize; DIM]) -> [f64; DIM] {
        let mut x = [0.0; DIM];
        for a in 0..DIM {
            x[a] = self.origin[a] + p[a] as f64 * self.spacing[a];
        }
        x
    }

    fn differentiated(&self, axis: usize) -> bool {
        self.shape[axis] > 1
    }

    /// The grid with one point stripped from both ends of each differentiated axis.
    fn interior(&self, needed: usize) -> Result<Grid, GeometryError> {
        let mut g = *self;
        for a in 0..DIM {
            if self.differentiated(a) {
                if self.shape[a] < needed {
                    return Err(GeometryError::GridTooSmall {
                        axis: a,
                        points: self.shape[a],
                        needed,
                    });
                }
                g.shape[a] -= 2;
                g.origin[a] += self.spacing[a];
            }
        }
        Ok(g)
    }

    fn shifted(p: [usize; DIM], axis: usize, delta: isize) -> [usize; DIM] {
        let mut q = p;
        q[axis] = (q[axis] as isize + delta) as usize;
        q
    }
}

/// A quantity sampled at every point of a grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Field<T> {
    pub grid: Grid,
    pub values: Vec<T>,
}

impl<T> Field<T> {
    pub fn at(&self, p: [usize; DIM]) -> &T {
        &self.values[self.grid.flat_index(p)]
    }
}

impl<T: Send> Field<T> {
    pub fn from_fn<F>(grid: Grid, exec: Execution, f: F) -> Self
    where
        F: Fn([f64; DIM]) -> T + Sync + Send,
    {
        let values = par::map_range(grid.len(), exec, |i| f(grid.coords(grid.point(i))));
        Self { grid, values }
    }
}

pub type MetricField = Field<Metric>;
pub type ConnectionField = Field<Connection>;
pub type RicciField = Field<Ricci>;

impl Field<Metric> {
    /// Samples `g(x)` and validates invertibility at every point.
    pub fn sample_metric<F>(grid: Grid, exec: Execution, f: F) -> Result<Self, GeometryError>
    where
        F: Fn([f64; DIM]) -> Rank2 + Sync + Send,
    {
        let values = par::map_range(grid.len(), exec, |i| {
            let p = grid.point(i);
            Metric::new(f(grid.coords(p))).map_err(|e| match e {
                GeometryError::MetricNotInvertible { det, .. } => {
                    GeometryError::MetricNotInvertible { det, point: p }
                }
                other => other,
            })
        });
        Ok(Self {
            grid,
            values: values.into_iter().collect::<Result<_, _>>()?,
        })
    }
}

/// `{α βγ} = ½ g^{αδ} (g_{βδ,γ} + g_{γδ,β} − g_{βγ,δ})` on interior points.
pub fn christoffel_from_metric(
    metric: &MetricField,
    exec: Execution,
) -> Result<ConnectionField, GeometryError> {
    let src = metric.grid;
    let out_grid = src.interior(3)?;
    let values = par::map_range(out_grid.len(), exec, |i| {
        let q = out_grid.point(i);
        // Same lattice site on the source grid.
        let mut p = q;
        for a in 0..DIM {
            if src.differentiated(a) {
                p[a] += 1;
            }
        }
        // dg[c][a][b] = ∂_c g_{ab}
        let mut dg = [[[0.0; DIM]; DIM]; DIM];
        for (c, slot) in dg.iter_mut().enumerate() {
            if !src.differentiated(c) {
                continue;
            }
            let minus = metric.at(Grid::shifted(p, c, -1)).lower();
            let plus = metric.at(Grid::shifted(p, c, 1)).lower();
            for a in 0..DIM {
                for b in 0..DIM {
                    slot[a][b] = centered(minus[a][b], plus[a][b], src.spacing[c]);
                }
            }
        }
        let gu = metric.at(p).upper();
        let mut gamma = ZERO3;
        for beta in 0..DIM {
            for gam in beta..DIM {
                for alpha in 0..DIM {
                    let v = 0.5
                        * (0..DIM)
                            .map(|d| {
                                gu[alpha][d]
                                    * (dg[gam][beta][d] + dg[beta][gam][d] - dg[d][beta][gam])
                            })
                            .sum::<f64>();
                    gamma[beta][gam][alpha] = v;
                    gamma[gam][beta][alpha] = v;
                }
            }
        }
        Connection(gamma)
    });
    Ok(Field {
        grid: out_grid,
        values,
    })
}

/// `R_{μν} = ∂_ρ Γ_{μν}^ρ − ∂_ν Γ_{μρ}^ρ + Γ_{μν}^ρ Γ_{ρτ}^τ − Γ_{μρ}^τ Γ_{ντ}^ρ`
/// with centered differences, on interior points only.
pub fn ricci_from_connection(
    gamma: &ConnectionField,
    exec: Execution,
) -> Result<RicciField, GeometryError> {
    let src = gamma.grid;
    let out_grid = src.interior(5)?;
    let values = par::map_range(out_grid.len(), exec, |i| {
        let q = out_grid.point(i);
        let mut p = q;
        for a in 0..DIM {
            if src.differentiated(a) {
                p[a] += 1;
            }
        }
        // d[c] = ∂_c Γ at p
        let mut d = [ZERO3; DIM];
        for (c, slot) in d.iter_mut().enumerate() {
            if !src.differentiated(c) {
                continue;
            }
            let minus = &gamma.at(Grid::shifted(p, c, -1)).0;
            let plus = &gamma.at(Grid::shifted(p, c, 1)).0;
            for mu in 0..DIM {
                for nu in 0..DIM {
                    for rho in 0..DIM {
                        slot[mu][nu][rho] =
                            centered(minus[mu][nu][rho], plus[mu][nu][rho], src.spacing[c]);
                    }
                }
            }
        }
        let mut r = ricci_quadratic(gamma.at(p)).0;
        for mu in 0..DIM {
            for nu in 0..DIM {
                let mut v = 0.0;
                for rho in 0..DIM {
                    v += d[rho][mu][nu][rho] - d[nu][mu][rho][rho];
                }
                r[mu][nu] += v;
            }
        }
        Ricci(r)
    });
    Ok(Field {
        grid: out_grid,
        values,
    })
}

/// Worst residual of each identity over a randomized batch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Default)]
pub struct IdentityResiduals {
    /// `sym + anti − Γ`
    pub split_reconstruction: f64,
    /// asymmetry of the symmetric part plus symmetry of the antisymmetric part
    pub split_symmetry: f64,
    /// `T + 2 Γ_{[μν]}`
    pub torsion_definition: f64,
    /// `K_{[μν]}^ρ + ½ T_{μν}^ρ`
    pub contorsion_antisymmetric_part: f64,
    /// `K_{μνρ} + K_{μρν}`
    pub contorsion_lowered_antisymmetry: f64,
    /// torsion of `{} + K(T)` minus `T`
    pub assembled_torsion: f64,
    /// `assemble(decompose(Γ)) − Γ`
    pub connection_round_trip: f64,
    /// `({} + K) − {} − K` recovered through decomposition
    pub contorsion_recovery: f64,
}

impl IdentityResiduals {
    pub fn max(&self) -> f64 {
        [
            self.split_reconstruction,
            self.split_symmetry,
            self.torsion_definition,
            self.contorsion_antisymmetric_part,
            self.contorsion_lowered_antisymmetry,
            self.assembled_torsion,
            self.connection_round_trip,
            self.contorsion_recovery,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    fn merge(self, o: Self) -> Self {
        Self {
            split_reconstruction: self.split_reconstruction.max(o.split_reconstruction),
            split_symmetry: self.split_symmetry.max(o.split_symmetry),
            torsion_definition: self.torsion_definition.max(o.torsion_definition),
            contorsion_antisymmetric_part: self
                .contorsion_antisymmetric_part
                .max(o.contorsion_antisymmetric_part),
            contorsion_lowered_antisymmetry: self
                .contorsion_lowered_antisymmetry
                .max(o.contorsion_lowered_antisymmetry),
            assembled_torsion: self.assembled_torsion.max(o.assembled_torsion),
            connection_round_trip: self.connection_round_trip.max(o.connection_round_trip),
            contorsion_recovery: self.contorsion_recovery.max(o.contorsion_recovery),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IdentityReport {
    pub seed: u64,
    pub trials: u64,
    pub tolerance: f64,
    pub residuals: IdentityResiduals,
    pub max_residual: f64,
    pub passed: bool,
}

/// One random instance of the identity checks.
#[derive(Debug, Clone, Copy)]
pub struct RandomInstance {
    pub metric: Metric,
    pub connection: Connection,
    pub symmetric: Connection,
    pub torsion: Torsion,
}

/// Deterministic instance `trial` of the stream for `seed`; independent of
/// how trials are scheduled.
pub fn random_instance(seed: u64, trial: u64) -> RandomInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    // η + 0.2·(symmetric noise): Gershgorin keeps every eigenvalue at least
    // 0.2 away from zero.
    let metric = loop {
        let mut g = Metric::minkowski().g;
        for i in 0..DIM {
            for j in i..DIM {
                let v = 0.2 * rng.gen_range(-1.0..1.0);
                g[i][j] += v;
                if i != j {
                    g[j][i] += v;
                }
            }
        }
        if let Ok(m) = Metric::new(g) {
            break m;
        }
    };
    let mut connection = ZERO3;
    let mut symmetric = ZERO3;
    let mut torsion = ZERO3;
    for mu in 0..DIM {
        for nu in 0..DIM {
            for rho in 0..DIM {
                connection[mu][nu][rho] = rng.gen_range(-1.0..1.0);
            }
        }
    }
    for mu in 0..DIM {
        for nu in mu..DIM {
            for rho in 0..DIM {
                let s = rng.gen_range(-1.0..1.0);
                symmetric[mu][nu][rho] = s;
                symmetric[nu][mu][rho] = s;
                let t = if mu == nu {
                    0.0
                } else {
                    rng.gen_range(-1.0..1.0)
                };
                torsion[mu][nu][rho] = t;
                torsion[nu][mu][rho] = -t;
            }
        }
    }
    RandomInstance {
        metric,
        connection: Connection(connection),
        symmetric: Connection(symmetric),
        torsion: Torsion(torsion),
    }
}

/// Runs every identity on one instance.
pub fn check_identities(inst: &RandomInstance) -> IdentityResiduals {
    let g = &inst.metric;
    let gamma = &inst.connection;

    let (sym, anti) = split_connection(gamma);
    let mut split_reconstruction = 0.0f64;
    for mu in 0..DIM {
        for nu in 0..DIM {
            for rho in 0..DIM {
                split_reconstruction = split_reconstruction
                    .max((sym.0[mu][nu][rho] + anti.0[mu][nu][rho] - gamma.0[mu][nu][rho]).abs());
            }
        }
    }
    let mut anti_sym = 0.0f64;
    for mu in 0..DIM {
        for nu in 0..DIM {
            for rho in 0..DIM {
                anti_sym = anti_sym.max((anti.0[mu][nu][rho] + anti.0[nu][mu][rho]).abs());
            }
        }
    }
    let split_symmetry = sym.asymmetry().max(anti_sym);

    let t_gamma = torsion_from_connection(gamma);
    let mut torsion_definition = 0.0f64;
    for (t, a) in t_gamma
        .0
        .iter()
        .flatten()
        .flatten()
        .zip(anti.0.iter().flatten().flatten())
    {
        torsion_definition = torsion_definition.max((t + 2.0 * a).abs());
    }

    let t = &inst.torsion;
    let k = contorsion_from_torsion(t, g);
    let mut kas = 0.0f64;
    let mut klow = 0.0f64;
    for mu in 0..DIM {
        for nu in 0..DIM {
            for rho in 0..DIM {
                let k_anti = 0.5 * (k.mixed[mu][nu][rho] - k.mixed[nu][mu][rho]);
                kas = kas.max((k_anti + 0.5 * t.0[mu][nu][rho]).abs());
                klow = klow.max((k.lowered[mu][nu][rho] + k.lowered[mu][rho][nu]).abs());
            }
        }
    }

    let assembled =
        assemble_connection(&inst.symmetric, &k).expect("random symmetric part is symmetric");
    let t_back = torsion_from_connection(&assembled);
    let mut assembled_torsion = 0.0f64;
    for (a, b) in t_back
        .0
        .iter()
        .flatten()
        .flatten()
        .zip(t.0.iter().flatten().flatten())
    {
        assembled_torsion = assembled_torsion.max((a - b).abs());
    }
    let (sym_back, k_back) = decompose_connection(&assembled, g);
    let mut contorsion_recovery = sym_back.max_abs_diff(&inst.symmetric);
    for (a, b) in k_back
        .mixed
        .iter()
        .flatten()
        .flatten()
        .zip(k.mixed.iter().flatten().flatten())
    {
        contorsion_recovery = contorsion_recovery.max((a - b).abs());
    }

    let (rem, k_gamma) = decompose_connection(gamma, g);
    let rebuilt =
        assemble_connection(&rem, &k_gamma).expect("decomposition remainder is symmetric");
    let connection_round_trip = rebuilt.max_abs_diff(gamma);

    IdentityResiduals {
        split_reconstruction,
        split_symmetry,
        torsion_definition,
        contorsion_antisymmetric_part: kas,
        contorsion_lowered_antisymmetry: klow,
        assembled_torsion,
        connection_round_trip,
        contorsion_recovery,
    }
}

/// The randomized identity suite over `trials` seeded instances.
pub fn run_identity_suite(seed: u64, trials: u64, exec: Execution) -> IdentityReport {
    let per_trial = par::map_range(trials as usize, exec, |i| {
        check_identities(&random_instance(seed, i as u64))
    });
    let residuals = per_trial
        .into_iter()
        .fold(IdentityResiduals::default(), IdentityResiduals::merge);
    let max_residual = residuals.max();
    IdentityReport {
        seed,
        trials,
        tolerance: IDENTITY_TOLERANCE,
        residuals,
        max_residual,
        passed: max_residual <= IDENTITY_TOLERANCE,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(mu: usize, nu: usize, rho: usize, v: f64) -> Rank3 {
        let mut a = ZERO3;
        a[mu][nu][rho] = v;
        a
    }

    #[test]
    fn split_of_pure_parts() {
        let inst = random_instance(7, 0);
        let (s, a) = split_connection(&inst.symmetric);
        assert_eq!(s, inst.symmetric);
        assert_eq!(max_abs3(&a.0), 0.0);
        let anti = Connection(inst.torsion.0);
        let (s, a) = split_connection(&anti);
        assert_eq!(max_abs3(&s.0), 0.0);
        assert_eq!(a, anti);
    }

    #[test]
    fn torsion_of_single_component() {
        let t = 0.75;
        let gamma = Connection(single(0, 1, 2, t));
        let torsion = torsion_from_connection(&gamma);
        assert_eq!(torsion.0[0][1][2], -t);
        assert_eq!(torsion.0[1][0][2], t);
        assert_eq!(
            max_abs3(&torsion_from_connection(&random_instance(1, 1).symmetric).0),
            0.0
        );
    }

    #[test]
    fn contorsion_brute_force_flat_single_component() {
        let t = 1.3;
        let mut tm = ZERO3;
        tm[0][1][2] = t;
        tm[1][0][2] = -t;
        let torsion = Torsion::new(tm).unwrap();
        let g = Metric::minkowski();
        let k = contorsion_from_torsion(&torsion, &g);

        // Independent loops over the defining formula with explicit η.
        let eta = [-1.0, 1.0, 1.0, 1.0];
        let low = |a: usize, b: usize, c: usize| tm[a][b][c] * eta[c];
        for mu in 0..DIM {
            for nu in 0..DIM {
                for rho in 0..DIM {
                    let expected =
                        0.5 * eta[rho] * (low(mu, rho, nu) + low(nu, rho, mu) - low(mu, nu, rho));
                    assert!((k.mixed[mu][nu][rho] - expected).abs() < 1e-15);
                }
            }
        }
        // Nonzero pattern: K_{01}^2 = K_{[01]}^2 = -t/2 and the symmetric
        // pieces K_{02}^1 = K_{20}^1 = ... from lowering.
        assert!((k.mixed[0][1][2] + 0.5 * t).abs() < 1e-15);
        assert!((k.mixed[1][0][2] - 0.5 * t).abs() < 1e-15);
        for mu in 0..DIM {
            for nu in 0..DIM {
                for rho in 0..DIM {
                    assert!(
                        (0.5 * (k.mixed[mu][nu][rho] - k.mixed[nu][mu][rho])
                            + 0.5 * tm[mu][nu][rho])
                            .abs()
                            < 1e-15
                    );
                    assert!((k.lowered[mu][nu][rho] + k.lowered[mu][rho][nu]).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn zero_torsion_gives_zero_contorsion() {
        let k =
            contorsion_from_torsion(&Torsion::new(ZERO3).unwrap(), &random_instance(3, 3).metric);
        assert_eq!(max_abs3(&k.mixed), 0.0);
    }

    #[test]
    fn validation_errors() {
        assert!(matches!(
            Torsion::new(single(0, 1, 2, 1.0)),
            Err(GeometryError::TorsionNotAntisymmetric(_))
        ));
        let mut g = Metric::minkowski().g;
        g[0][1] = 0.5;
        assert!(matches!(
            Metric::new(g),
            Err(GeometryError::MetricNotSymmetric(_))
        ));
        let mut g = [[0.0; DIM]; DIM];
        g[0][0] = 1.0;
        assert!(matches!(
            Metric::new(g),
            Err(GeometryError::MetricNotInvertible { .. })
        ));
        let k = contorsion_from_torsion(&Torsion::new(ZERO3).unwrap(), &Metric::minkowski());
        assert!(matches!(
            assemble_connection(&Connection(single(0, 1, 2, 1.0)), &k),
            Err(GeometryError::ConnectionNotSymmetric(_))
        ));
    }

    #[test]
    fn assemble_with_zero_contorsion_is_identity() {
        let inst = random_instance(11, 4);
        let k = contorsion_from_torsion(&Torsion::new(ZERO3).unwrap(), &inst.metric);
        assert_eq!(
            assemble_connection(&inst.symmetric, &k).unwrap(),
            inst.symmetric
        );
    }

    #[test]
    fn identities_hold_on_random_instances() {
        let report = run_identity_suite(42, 200, Execution::Sequential);
        assert!(report.passed, "{report:?}");
        assert!(report.residuals.split_reconstruction <= 1e-15);
        assert!(report.residuals.contorsion_antisymmetric_part <= 1e-12);
        assert!(report.residuals.contorsion_lowered_antisymmetry <= 1e-12);
    }

    #[test]
    fn parallel_suite_matches_sequential() {
        let a = run_identity_suite(5, 300, Execution::Sequential);
        let b = run_identity_suite(5, 300, Execution::Parallel);
        assert_eq!(a, b);
    }

    #[test]
    fn minkowski_christoffels_vanish() {
        let grid = Grid::new([5, 5, 5, 5], [0.1; DIM], [0.0; DIM]).unwrap();
        let metric =
            MetricField::sample_metric(grid, Execution::Parallel, |_| Metric::minkowski().g)
                .unwrap();
        let gamma = christoffel_from_metric(&metric, Execution::Parallel).unwrap();
        assert_eq!(gamma.grid.shape, [3, 3, 3, 3]);
        assert!(gamma.values.iter().all(|c| max_abs3(&c.0) == 0.0));
    }

    #[test]
    fn singular_metric_reports_grid_point() {
        let grid = Grid::line(1, 5, -0.2, 0.1).unwrap();
        let err = MetricField::sample_metric(grid, Execution::Sequential, |x| {
            let mut g = Metric::minkowski().g;
            g[1][1] = x[1];
            g
        })
        .unwrap_err();
        assert_eq!(
            err,
            GeometryError::MetricNotInvertible {
                det: -0.0,
                point: [0, 2, 0, 0]
            }
        );
    }

    #[test]
    fn ricci_rejects_small_grids() {
        let grid = Grid::line(2, 4, 0.5, 0.1).unwrap();
        let field = ConnectionField::from_fn(grid, Execution::Sequential, |_| Connection::zero());
        assert!(matches!(
            ricci_from_connection(&field, Execution::Sequential),
            Err(GeometryError::GridTooSmall {
                axis: 2,
                points: 4,
                needed: 5
            })
        ));
    }

    #[test]
    fn ricci_of_zero_connection_is_exactly_zero() {
        let grid = Grid::new([5, 6, 5, 7], [0.1, 0.2, 0.3, 0.4], [0.0; DIM]).unwrap();
        let field = ConnectionField::from_fn(grid, Execution::Parallel, |_| Connection::zero());
        let r = ricci_from_connection(&field, Execution::Parallel).unwrap();
        assert_eq!(r.grid.shape, [3, 4, 3, 5]);
        assert!(r
            .values
            .iter()
            .all(|r| r.0.iter().flatten().all(|v| *v == 0.0)));
    }

    #[test]
    fn ricci_of_constant_connection_is_quadratic_part() {
        let inst = random_instance(9, 2);
        let grid = Grid::new([5, 5, 1, 1], [0.1, 0.1, 1.0, 1.0], [0.0; DIM]).unwrap();
        let field = ConnectionField::from_fn(grid, Execution::Sequential, |_| inst.connection);
        let r = ricci_from_connection(&field, Execution::Sequential).unwrap();

        // Brute-force quadratic terms, written out independently.
        let c = &inst.connection.0;
        for mu in 0..DIM {
            for nu in 0..DIM {
                let mut expected = 0.0;
                for rho in 0..DIM {
                    for tau in 0..DIM {
                        expected +=
                            c[mu][nu][rho] * c[rho][tau][tau] - c[mu][rho][tau] * c[nu][tau][rho];
                    }
                }
                for v in &r.values {
                    assert!((v.0[mu][nu] - expected).abs() < 1e-13);
                }
            }
        }
    }
}
