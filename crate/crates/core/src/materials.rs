//! Constitutive laws of the four design materials and the fixed regions.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::Region;

/// Reluctivity of vacuum, `1/μ_0` in A/(m·T).
pub const NU0: f64 = 1.0 / (4.0e-7 * PI);

/// Design materials in their fixed order `f, m1, m2, a`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[repr(u8)]
pub enum MaterialId {
    Iron = 0,
    Magnet1 = 1,
    Magnet2 = 2,
    Air = 3,
}

impl MaterialId {
    pub const ALL: [MaterialId; 4] = [
        MaterialId::Iron,
        MaterialId::Magnet1,
        MaterialId::Magnet2,
        MaterialId::Air,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Result<Self> {
        MaterialId::ALL
            .get(i)
            .copied()
            .ok_or(Error::UnknownMaterial(i.min(255) as u8))
    }

    pub fn is_magnet(self) -> bool {
        matches!(self, MaterialId::Magnet1 | MaterialId::Magnet2)
    }

    pub fn symbol(self) -> &'static str {
        match self {
            MaterialId::Iron => "f",
            MaterialId::Magnet1 => "m1",
            MaterialId::Magnet2 => "m2",
            MaterialId::Air => "a",
        }
    }
}

/// Brauer reluctivity `ν(s) = k1·exp(k2·s) + k3`, `s = |b|²`.
///
/// Past the flux density `b_c` where the differential reluctivity reaches
/// `ν_0`, the curve continues as a straight line of slope `ν_0` in the
/// `|h|–|b|` plane, so `ν` approaches `ν_0` from below.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BrauerCurve {
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    knee_b: f64,
    knee_h: f64,
}

impl BrauerCurve {
    pub fn new(k1: f64, k2: f64, k3: f64) -> Result<Self> {
        if !(k1 > 0.0 && k2 > 0.0 && k3 > 0.0) || k1 + k3 >= NU0 {
            return Err(Error::Material(format!(
                "Brauer parameters k1={k1}, k2={k2}, k3={k3} must be positive with k1+k3 < ν0"
            )));
        }
        // differential reluctivity along b: k1 e^{k2 s}(1 + 2 k2 s) + k3, increasing in s
        let dh = |s: f64| k1 * (k2 * s).exp() * (1.0 + 2.0 * k2 * s) + k3;
        let (mut lo, mut hi) = (0.0, 1.0);
        while dh(hi) < NU0 {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if dh(mid) < NU0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let s = 0.5 * (lo + hi);
        let b = s.sqrt();
        Ok(Self {
            k1,
            k2,
            k3,
            knee_b: b,
            knee_h: (k1 * (k2 * s).exp() + k3) * b,
        })
    }

    /// Fits `k1, k2` for fixed `k3` so that `|h|(|b|)` passes through two
    /// `(H, B)` points.
    pub fn fit(k3: f64, p1: (f64, f64), p2: (f64, f64)) -> Result<Self> {
        let (h1, b1) = p1;
        let (h2, b2) = p2;
        let y1 = h1 / b1 - k3;
        let y2 = h2 / b2 - k3;
        if !(y1 > 0.0 && y2 > y1 && b2 > b1 && b1 > 0.0) {
            return Err(Error::Material("Brauer fit points must give increasing H/B - k3 > 0".into()));
        }
        let k2 = (y2 / y1).ln() / (b2 * b2 - b1 * b1);
        let k1 = y1 / (k2 * b1 * b1).exp();
        Self::new(k1, k2, k3)
    }

    pub fn knee(&self) -> (f64, f64) {
        (self.knee_b, self.knee_h)
    }

    /// `(ν, d|h|/d|b|)` at flux density magnitude `bm`.
    fn eval(&self, bm: f64) -> (f64, f64) {
        if bm <= self.knee_b {
            let s = bm * bm;
            let e = self.k1 * (self.k2 * s).exp();
            (e + self.k3, e * (1.0 + 2.0 * self.k2 * s) + self.k3)
        } else {
            let h = self.knee_h + NU0 * (bm - self.knee_b);
            (h / bm, NU0)
        }
    }
}

/// Monotone piecewise cubic Hermite interpolant of a tabulated `H(B)` curve,
/// extended linearly with slope `ν_0` beyond the last sample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TabulatedCurve {
    b: Vec<f64>,
    h: Vec<f64>,
    slope: Vec<f64>,
}

impl TabulatedCurve {
    /// `points` are `(H, B)` pairs; the origin is added when missing.
    pub fn new(points: &[(f64, f64)]) -> Result<Self> {
        let mut b = vec![0.0];
        let mut h = vec![0.0];
        for &(hv, bv) in points {
            if hv == 0.0 && bv == 0.0 {
                continue;
            }
            if !(bv > *b.last().unwrap() && hv > *h.last().unwrap()) {
                return Err(Error::Material(format!(
                    "BH table must be strictly increasing in H and B (at H={hv}, B={bv})"
                )));
            }
            b.push(bv);
            h.push(hv);
        }
        if b.len() < 3 {
            return Err(Error::Material("BH table needs at least two non-zero samples".into()));
        }
        let n = b.len();
        let d: Vec<f64> = (0..n - 1).map(|i| (h[i + 1] - h[i]) / (b[i + 1] - b[i])).collect();
        let mut slope = vec![0.0; n];
        slope[0] = d[0];
        slope[n - 1] = d[n - 2];
        for i in 1..n - 1 {
            if d[i - 1] * d[i] > 0.0 {
                let w1 = 2.0 * (b[i + 1] - b[i]) + (b[i] - b[i - 1]);
                let w2 = (b[i + 1] - b[i]) + 2.0 * (b[i] - b[i - 1]);
                slope[i] = (w1 + w2) / (w1 / d[i - 1] + w2 / d[i]);
            }
        }
        Ok(Self { b, h, slope })
    }

    /// Parses two whitespace- or comma-separated columns `H B`; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut pts = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|s| !s.is_empty())
                .collect();
            let parse = |s: &str| {
                s.parse::<f64>().map_err(|_| Error::Parse {
                    line: i + 1,
                    message: format!("not a number: {s:?}"),
                })
            };
            if cols.len() != 2 {
                return Err(Error::Parse {
                    line: i + 1,
                    message: "expected two columns H B".into(),
                });
            }
            pts.push((parse(cols[0])?, parse(cols[1])?));
        }
        Self::new(&pts)
    }

    fn eval(&self, bm: f64) -> (f64, f64) {
        let n = self.b.len();
        let bl = self.b[n - 1];
        if bm >= bl {
            let hm = self.h[n - 1] + NU0 * (bm - bl);
            return (hm / bm, NU0);
        }
        let i = self.b.partition_point(|&x| x <= bm).saturating_sub(1).min(n - 2);
        let dx = self.b[i + 1] - self.b[i];
        let t = (bm - self.b[i]) / dx;
        let (h0, h1, m0, m1) = (self.h[i], self.h[i + 1], self.slope[i], self.slope[i + 1]);
        let t2 = t * t;
        let t3 = t2 * t;
        let hv = (2.0 * t3 - 3.0 * t2 + 1.0) * h0
            + (t3 - 2.0 * t2 + t) * dx * m0
            + (-2.0 * t3 + 3.0 * t2) * h1
            + (t3 - t2) * dx * m1;
        let dh = ((6.0 * t2 - 6.0 * t) * h0
            + (3.0 * t2 - 4.0 * t + 1.0) * dx * m0
            + (-6.0 * t2 + 6.0 * t) * h1
            + (3.0 * t2 - 2.0 * t) * dx * m1)
            / dx;
        if bm < 1e-12 {
            return (self.slope[0], self.slope[0]);
        }
        (hv / bm, dh)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum IronCurve {
    Brauer(BrauerCurve),
    Table(TabulatedCurve),
}

impl IronCurve {
    fn eval(&self, bm: f64) -> (f64, f64) {
        match self {
            IronCurve::Brauer(c) => c.eval(bm),
            IronCurve::Table(c) => c.eval(bm),
        }
    }
}

/// Magnetic constitutive law `h(b)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum MagneticLaw {
    Linear { nu: f64 },
    Magnet { nu: f64, remanence: [f64; 2] },
    Nonlinear(IronCurve),
}

impl MagneticLaw {
    pub fn h(&self, b: [f64; 2]) -> [f64; 2] {
        match self {
            MagneticLaw::Linear { nu } => [nu * b[0], nu * b[1]],
            MagneticLaw::Magnet { nu, remanence } => {
                [nu * (b[0] - remanence[0]), nu * (b[1] - remanence[1])]
            }
            MagneticLaw::Nonlinear(c) => {
                let (nu, _) = c.eval(b[0].hypot(b[1]));
                [nu * b[0], nu * b[1]]
            }
        }
    }

    /// `∂h/∂b`, symmetric positive definite.
    pub fn tangent(&self, b: [f64; 2]) -> [[f64; 2]; 2] {
        match self {
            MagneticLaw::Linear { nu } | MagneticLaw::Magnet { nu, .. } => [[*nu, 0.0], [0.0, *nu]],
            MagneticLaw::Nonlinear(c) => {
                let bm = b[0].hypot(b[1]);
                let (nu, dh) = c.eval(bm);
                if bm < 1e-12 {
                    return [[nu, 0.0], [0.0, nu]];
                }
                let u = [b[0] / bm, b[1] / bm];
                let d = dh - nu;
                [
                    [nu + d * u[0] * u[0], d * u[0] * u[1]],
                    [d * u[0] * u[1], nu + d * u[1] * u[1]],
                ]
            }
        }
    }

    /// Secant reluctivity `|h + M|/|b|`, i.e. `ν(|b|²)` for iron.
    pub fn nu(&self, b: [f64; 2]) -> f64 {
        match self {
            MagneticLaw::Linear { nu } | MagneticLaw::Magnet { nu, .. } => *nu,
            MagneticLaw::Nonlinear(c) => c.eval(b[0].hypot(b[1])).0,
        }
    }

    /// Magnetization `M` in `h = ν b − M` (`ν·B_R` for magnets).
    pub fn magnetization(&self) -> [f64; 2] {
        match self {
            MagneticLaw::Magnet { nu, remanence } => [nu * remanence[0], nu * remanence[1]],
            _ => [0.0, 0.0],
        }
    }

    pub fn is_linear(&self) -> bool {
        !matches!(self, MagneticLaw::Nonlinear(_))
    }
}

/// Material data of one design material.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Material {
    pub law: MagneticLaw,
    /// Electric conductivity, S/m.
    pub sigma: f64,
    /// Thermal conductivity, W/(m·K).
    pub lambda: f64,
    /// Mass density, kg/m³.
    pub rho: f64,
    /// Young modulus, Pa.
    pub young: f64,
    pub poisson: f64,
}

/// The four design materials, indexed by [`MaterialId`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaterialSet {
    pub materials: [Material; 4],
}

/// Scalar inputs of the default material set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MaterialParams {
    pub magnet_conductivity: f64,
    pub lambda_iron: f64,
    pub lambda_magnet: f64,
    pub lambda_air: f64,
    pub rho_iron: f64,
    pub rho_magnet: f64,
    pub rho_air: f64,
    pub young_iron: f64,
    pub young_magnet: f64,
    pub young_air: f64,
    pub poisson: f64,
    pub remanence: f64,
    pub magnet1_angle_deg: f64,
    pub magnet2_angle_deg: f64,
    pub magnet_recoil_permeability: f64,
    pub brauer_k3: f64,
    pub brauer_point1: (f64, f64),
    pub brauer_point2: (f64, f64),
}

impl Default for MaterialParams {
    fn default() -> Self {
        Self {
            magnet_conductivity: 6.7e5,
            lambda_iron: 16.0,
            lambda_magnet: 9.0,
            lambda_air: 0.05,
            rho_iron: 7650.0,
            rho_magnet: 8400.0,
            rho_air: 0.0,
            young_iron: 200e9,
            young_magnet: 0.2e9,
            young_air: 0.2e9,
            poisson: 1.0 / 3.0,
            remanence: 1.216,
            magnet1_angle_deg: 30.0,
            magnet2_angle_deg: 15.0,
            magnet_recoil_permeability: 1.05,
            brauer_k3: 380.0,
            brauer_point1: (500.0, 1.2),
            brauer_point2: (1.0e4, 1.8),
        }
    }
}

impl MaterialParams {
    /// Builds the set, using `curve` for iron when given and the fitted
    /// Brauer curve otherwise.
    pub fn build(&self, curve: Option<IronCurve>) -> Result<MaterialSet> {
        let iron_curve = match curve {
            Some(c) => c,
            None => IronCurve::Brauer(BrauerCurve::fit(
                self.brauer_k3,
                self.brauer_point1,
                self.brauer_point2,
            )?),
        };
        let nu_m = NU0 / self.magnet_recoil_permeability;
        let br = |deg: f64| {
            let a = deg.to_radians();
            [self.remanence * a.cos(), self.remanence * a.sin()]
        };
        let magnet = |deg: f64| Material {
            law: MagneticLaw::Magnet {
                nu: nu_m,
                remanence: br(deg),
            },
            sigma: self.magnet_conductivity,
            lambda: self.lambda_magnet,
            rho: self.rho_magnet,
            young: self.young_magnet,
            poisson: self.poisson,
        };
        let set = MaterialSet {
            materials: [
                Material {
                    law: MagneticLaw::Nonlinear(iron_curve),
                    sigma: 0.0,
                    lambda: self.lambda_iron,
                    rho: self.rho_iron,
                    young: self.young_iron,
                    poisson: self.poisson,
                },
                magnet(self.magnet1_angle_deg),
                magnet(self.magnet2_angle_deg),
                Material {
                    law: MagneticLaw::Linear { nu: NU0 },
                    sigma: 0.0,
                    lambda: self.lambda_air,
                    rho: self.rho_air,
                    young: self.young_air,
                    poisson: self.poisson,
                },
            ],
        };
        set.validate()?;
        Ok(set)
    }
}

impl Default for MaterialSet {
    fn default() -> Self {
        MaterialParams::default()
            .build(None)
            .expect("default material parameters are valid")
    }
}

impl MaterialSet {
    pub fn get(&self, id: MaterialId) -> &Material {
        &self.materials[id.index()]
    }

    /// The same set with every nonlinear law replaced by a linear law with
    /// the given relative permeability.
    pub fn linearized(&self, relative_permeability: f64) -> Self {
        let mut s = self.clone();
        for m in &mut s.materials {
            if !m.law.is_linear() {
                m.law = MagneticLaw::Linear {
                    nu: NU0 / relative_permeability,
                };
            }
        }
        s
    }

    pub fn validate(&self) -> Result<()> {
        for id in MaterialId::ALL {
            let m = self.get(id);
            let name = id.symbol();
            if !(m.lambda > 0.0) {
                return Err(Error::Material(format!("thermal conductivity of {name} must be positive")));
            }
            if !(m.young > 0.0) {
                return Err(Error::Material(format!("Young modulus of {name} must be positive")));
            }
            if !(m.poisson > -1.0 && m.poisson < 0.5) {
                return Err(Error::Material(format!("Poisson ratio of {name} must lie in (-1, 0.5)")));
            }
            if m.sigma < 0.0 || m.rho < 0.0 {
                return Err(Error::Material(format!("conductivity and density of {name} must be non-negative")));
            }
        }
        Ok(())
    }

    /// Material of a fixed (non-design) region.
    pub fn fixed_region(&self, region: Region) -> Option<MaterialId> {
        match region {
            Region::Design => None,
            Region::IronRing | Region::StatorIron => Some(MaterialId::Iron),
            _ => Some(MaterialId::Air),
        }
    }
}
