//! Run configuration: a TOML document with one section per concern.
//!
//! See `configs/README.md` for the full schema.

use std::fs;
use std::path::Path;

use inclusion_core::exec::Execution;
use inclusion_core::fundsol::LayeredKernel;
use inclusion_core::geometry::{AugmentedDomain, InclusionShape, Point, ShapeKind};
use inclusion_core::green::pole_cell;
use inclusion_core::inverse::{Configuration, PoleGrid, SweepFamily};
use inclusion_core::media::{MediumSpec, TensorSpec};
use inclusion_core::solver::SolverOptions;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub lo: Point,
    pub hi: Point,
    /// Cells across the shortest side of Ω.
    pub resolution: usize,
    pub sigma_lo: [f64; 2],
    pub sigma_hi: [f64; 2],
    /// Depth of the exterior box D₀.
    pub r0: f64,
    /// Minimum distance of an inclusion from ∂Ω.
    #[serde(default = "d_delta0")]
    pub delta0: f64,
}

fn d_delta0() -> f64 {
    0.1
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoleSpec {
    /// Poles for Green dumps and the reciprocity check.
    #[serde(default)]
    pub green: Vec<Point>,
    pub dy: Option<PoleGrid>,
    pub dz: Option<PoleGrid>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSpec {
    /// Boundary point O; defaults to the inclusion's boundary point along
    /// `direction` seen from its center.
    pub origin: Option<Point>,
    pub direction: Point,
    /// Offsets in units of the grid spacing, strictly decreasing.
    pub offset_cells: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FundsolSpec {
    pub a_plus: f64,
    pub a_minus: f64,
    #[serde(default)]
    pub a0: TensorSpec,
    #[serde(default)]
    pub interface: f64,
    pub pole: Point,
    /// Tangential positions where transmission is checked.
    pub probes: Vec<[f64; 2]>,
    #[serde(default = "d_step")]
    pub step: f64,
    #[serde(default = "d_resolutions")]
    pub resolutions: Vec<usize>,
    /// Exclusion radius around pole, interface and walls in the residual test.
    #[serde(default = "d_exclude")]
    pub exclude: f64,
}

fn d_step() -> f64 {
    1e-3
}
fn d_resolutions() -> Vec<usize> {
    vec![16, 32]
}
fn d_exclude() -> f64 {
    0.2
}

impl FundsolSpec {
    pub fn kernel(&self) -> Result<LayeredKernel, CliError> {
        Ok(LayeredKernel::new(self.a_plus, self.a_minus, self.a0.tensor()?, self.interface)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForwardSpec {
    /// Indices into the sixteen-bump Σ basis.
    #[serde(default = "d_inputs")]
    pub inputs: Vec<usize>,
}

fn d_inputs() -> Vec<usize> {
    vec![0]
}

/// Acceptance limits; every default matches the module contracts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub symmetry: f64,
    pub recursion: f64,
    pub identity: f64,
    pub f_identity: f64,
    pub misfit_zero: f64,
    pub aperture_zero: f64,
    pub f_zero: f64,
    pub directed_agreement: f64,
    pub transmission: f64,
    pub residual_ratio: f64,
    pub probe_slope: [f64; 2],
    pub correlation: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            symmetry: 2e-2,
            recursion: 5e-2,
            identity: 5e-2,
            f_identity: 1e-8,
            misfit_zero: 1e-12,
            aperture_zero: 1e-8,
            f_zero: 1e-10,
            directed_agreement: 1e-6,
            transmission: 1e-4,
            residual_ratio: 3.5,
            probe_slope: [-1.35, -0.65],
            correlation: 0.9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridSpec,
    #[serde(default)]
    pub solver: SolverOptions,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub medium: MediumSpec,
    /// Second medium of a pair; defaults to `medium`.
    pub medium2: Option<MediumSpec>,
    #[serde(default = "d_shape")]
    pub inclusion: ShapeKind,
    /// Second inclusion of a pair; defaults to `inclusion`.
    pub inclusion2: Option<ShapeKind>,
    #[serde(default)]
    pub poles: PoleSpec,
    pub probe: Option<ProbeSpec>,
    pub sweep: Option<SweepFamily>,
    pub fundsol: Option<FundsolSpec>,
    pub forward: Option<ForwardSpec>,
}

fn d_shape() -> ShapeKind {
    ShapeKind::Empty
}

/// Lowercase hex SHA-256.
pub fn hash_bytes(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Parsed config and the hash of its bytes.
    pub fn load(path: &Path) -> Result<(Self, String), CliError> {
        let bytes = fs::read(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let text = String::from_utf8(bytes.clone()).map_err(|_| CliError::Config("config is not UTF-8".into()))?;
        let cfg = Self::parse(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })?;
        Ok((cfg, hash_bytes(&bytes)))
    }

    pub fn second_medium(&self) -> &MediumSpec {
        self.medium2.as_ref().unwrap_or(&self.medium)
    }

    pub fn second_inclusion(&self) -> &ShapeKind {
        self.inclusion2.as_ref().unwrap_or(&self.inclusion)
    }

    /// True when both members of the pair are the same configuration.
    pub fn is_identical_pair(&self) -> bool {
        self.second_medium() == &self.medium && self.second_inclusion() == &self.inclusion
    }

    pub fn augmented(&self) -> Result<AugmentedDomain, CliError> {
        let g = &self.grid;
        Ok(AugmentedDomain::from_box(g.lo, g.hi, g.sigma_lo, g.sigma_hi, g.r0, g.resolution)?)
    }

    /// Checks every precondition that can be checked before a solve.
    pub fn validate(&self, aug: &AugmentedDomain) -> Result<(), CliError> {
        for kind in [&self.inclusion, self.second_inclusion()] {
            InclusionShape::rasterize(kind.clone(), aug.grid())?.validate(aug.grid(), &aug.omega, self.grid.delta0)?;
        }
        self.medium.tensor.tensor()?;
        self.second_medium().tensor.tensor()?;
        if let (Some(dy), Some(dz)) = (&self.poles.dy, &self.poles.dz) {
            dy.validate()?;
            dz.validate()?;
            if dy.overlaps(dz) {
                return Err(CliError::Core(inclusion_core::Error::Invalid("pole grids overlap".into())));
            }
            for p in dy.points().iter().chain(&dz.points()) {
                if !aug.in_d0(*p) {
                    return Err(CliError::Config(format!("pole {p:?} of D_y/D_z is not in D₀")));
                }
                pole_cell(aug.grid(), *p)?;
            }
        }
        for p in &self.poles.green {
            pole_cell(aug.grid(), *p)?;
        }
        if let Some(p) = &self.probe {
            if p.offset_cells.len() < 2 || p.offset_cells.windows(2).any(|w| !(w[1] < w[0])) || p.offset_cells.iter().any(|&v| !(v > 0.0)) {
                return Err(CliError::Config("probe.offset_cells must be positive and strictly decreasing".into()));
            }
            let (origin, normal, h) = self.probe_geometry(aug)?;
            let masks = [&self.inclusion, self.second_inclusion()]
                .map(|k| InclusionShape::rasterize(k.clone(), aug.grid()).map(|s| s.mask));
            let [m1, m2] = masks;
            let (m1, m2) = (m1?, m2?);
            for t in h {
                let y = [0, 1, 2].map(|a| origin[a] + t * normal[a]);
                let c = pole_cell(aug.grid(), y)?;
                if m1[c] || m2[c] {
                    return Err(CliError::Config(format!("probe pole {y:?} enters the inclusion")));
                }
            }
        }
        if let Some(s) = &self.sweep {
            s.validate()?;
            for f in &s.factors {
                InclusionShape::rasterize(s.base.dilated(*f)?, aug.grid())?.validate(aug.grid(), &aug.omega, self.grid.delta0)?;
            }
        }
        if let Some(f) = &self.fundsol {
            f.kernel()?;
        }
        Ok(())
    }

    /// The two configurations of the pair, each with its operator factored.
    pub fn pair(&self, aug: &AugmentedDomain, exec: Execution) -> Result<(Configuration, Configuration), CliError> {
        let s1 = InclusionShape::rasterize(self.inclusion.clone(), aug.grid())?;
        let first = Configuration::new(aug, &self.medium, s1, self.solver, exec)?;
        let s2 = InclusionShape::rasterize(self.second_inclusion().clone(), aug.grid())?;
        let second = Configuration::new(aug, self.second_medium(), s2, self.solver, exec)?;
        Ok((first, second))
    }

    /// Probe origin, unit direction and absolute offsets.
    pub fn probe_geometry(&self, aug: &AugmentedDomain) -> Result<(Point, Point, Vec<f64>), CliError> {
        let p = self.probe.as_ref().ok_or_else(|| CliError::Config("missing [probe] section".into()))?;
        let origin = match p.origin {
            Some(o) => o,
            None => self
                .inclusion
                .boundary_point(p.direction)
                .ok_or_else(|| CliError::Config("probe.origin required for this inclusion kind".into()))?,
        };
        let normal = self.inclusion.normal(origin).unwrap_or(p.direction);
        let len = normal.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(len > 0.0) {
            return Err(CliError::Config("probe direction is zero".into()));
        }
        let normal = normal.map(|v| v / len);
        let h = aug.spacing();
        Ok((origin, normal, p.offset_cells.iter().map(|k| k * h).collect()))
    }
}
