//! Random piecewise-constant phantoms made of axis-aligned ellipses
//! (ellipsoids in 3D), and a layered Shepp-Logan-like head phantom.
//!
//! Shapes are painted in draw order, later ones overwriting earlier ones, so
//! the image stays piecewise constant. To hit a target gradient sparsity
//! `ρ = k/n`, shapes are drawn one at a time and kept only if `k` does not
//! overshoot the upper end of the tolerance band; drawing stops once `k` is
//! inside the band.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{Image, Lattice};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhantomSpec {
    pub lattice: Lattice,
    pub target_rho: f64,
    /// Relative tolerance on `k` around `target_rho · n`.
    pub tolerance: f64,
    pub intensity_levels: Vec<f64>,
    pub background: f64,
    /// Number of shape draws before giving up.
    pub max_shapes: usize,
    /// Radii are uniform in `[min, max] · d` per axis.
    pub radius_range: (f64, f64),
    /// Keep every shape inside the domain instead of drawing centers
    /// uniformly over it. Shapes cut by the border lose the part of their
    /// outline that lies outside, which at small `ρ` favors large objects
    /// pressed against the edge.
    #[serde(default)]
    pub contained: bool,
    pub seed: u64,
}

impl PhantomSpec {
    pub fn new(lattice: Lattice, target_rho: f64, seed: u64) -> Self {
        PhantomSpec {
            lattice,
            target_rho,
            tolerance: 0.05,
            intensity_levels: vec![0.25, 0.5, 0.75, 1.0],
            background: 0.0,
            max_shapes: 5000,
            radius_range: (1.0 / 20.0, 1.0 / 4.0),
            contained: false,
            seed,
        }
    }

    pub fn with_background(mut self, background: f64) -> Self {
        self.background = background;
        self
    }

    pub fn with_levels(mut self, levels: Vec<f64>) -> Self {
        self.intensity_levels = levels;
        self
    }

    fn validate(&self) -> Result<()> {
        let (n, p) = (self.lattice.n() as f64, self.lattice.p() as f64);
        if !(self.target_rho >= 0.0) || self.target_rho * n > p {
            return Err(Error::invalid(format!(
                "target rho {} outside [0, p/n = {}]",
                self.target_rho,
                p / n
            )));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::invalid("tolerance must be positive"));
        }
        if self.intensity_levels.is_empty()
            || self.intensity_levels.iter().any(|&v| !(v > 0.0) || !v.is_finite())
        {
            return Err(Error::invalid("intensity levels must be positive"));
        }
        if !(self.background >= 0.0) {
            return Err(Error::invalid("background must be nonnegative"));
        }
        let (lo, hi) = self.radius_range;
        if !(lo > 0.0 && lo <= hi) {
            return Err(Error::invalid("radius range must satisfy 0 < min <= max"));
        }
        Ok(())
    }
}

/// Axis-aligned ellipse or ellipsoid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ellipsoid {
    pub center: [f64; 3],
    pub radii: [f64; 3],
    pub value: f64,
}

impl Ellipsoid {
    fn contains(&self, dim: usize, c: [usize; 3]) -> bool {
        (0..dim)
            .map(|a| ((c[a] as f64 - self.center[a]) / self.radii[a]).powi(2))
            .sum::<f64>()
            <= 1.0
    }

    /// Inclusive vertex bounding box, clamped to the lattice.
    fn bbox(&self, lattice: &Lattice) -> [(usize, usize); 3] {
        let mut out = [(0, 0); 3];
        for (a, &n) in lattice.dims().iter().enumerate() {
            let lo = (self.center[a] - self.radii[a]).ceil().max(0.0);
            let hi = (self.center[a] + self.radii[a]).floor().min((n - 1) as f64);
            out[a] = if lo > hi { (1, 0) } else { (lo as usize, hi as usize) };
        }
        out
    }
}

/// Paints ellipsoids in order onto a constant background.
pub fn paint(lattice: &Lattice, background: f64, shapes: &[Ellipsoid]) -> Vec<f64> {
    let mut u = vec![background; lattice.n()];
    for s in shapes {
        for_each_in_box(lattice, s.bbox(lattice), |v, c| {
            if s.contains(lattice.dim(), c) {
                u[v] = s.value;
            }
        });
    }
    u
}

fn for_each_in_box(lattice: &Lattice, bbox: [(usize, usize); 3], mut f: impl FnMut(usize, [usize; 3])) {
    let dim = lattice.dim();
    let range = |a: usize| if a < dim { bbox[a].0..bbox[a].1 + 1 } else { 0..1 };
    for i in range(0) {
        for j in range(1) {
            for k in range(2) {
                let c = [i, j, k];
                f(lattice.vertex_index(&c[..dim]), c);
            }
        }
    }
}

/// Nonzero gradient entries on edges touching the box.
fn local_k(lattice: &Lattice, u: &[f64], bbox: [(usize, usize); 3]) -> usize {
    let dim = lattice.dim();
    let mut grown = bbox;
    for a in 0..dim {
        grown[a].0 = grown[a].0.saturating_sub(1);
    }
    let mut count = 0;
    for_each_in_box(lattice, grown, |v, c| {
        for a in 0..dim {
            if let Some(e) = lattice.edge_from(v, a) {
                let hi_inside = (0..dim).all(|x| {
                    let cx = if x == a { c[x] + 1 } else { c[x] };
                    cx >= bbox[x].0 && cx <= bbox[x].1
                });
                let lo_inside = (0..dim).all(|x| c[x] >= bbox[x].0 && c[x] <= bbox[x].1);
                if lo_inside || hi_inside {
                    let (_, lo, hi) = lattice.edge(e);
                    count += usize::from(u[lo] != u[hi]);
                }
            }
        }
    });
    count
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Phantom {
    pub image: Image,
    pub shapes: Vec<Ellipsoid>,
    pub k: usize,
    pub ell: usize,
    pub rho: f64,
    pub draws: usize,
}

/// Draws a random phantom with `‖∇u‖₀ / n` within tolerance of the target.
pub fn generate(spec: &PhantomSpec) -> Result<Phantom> {
    spec.validate()?;
    let lattice = spec.lattice;
    let (n, dim) = (lattice.n(), lattice.dim());
    let target = spec.target_rho * n as f64;
    // half an edge of slack so that targets below one edge are reachable
    let slack = (spec.tolerance * target).max(0.5);
    let upper = target + slack;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut u = vec![spec.background; n];
    let mut shapes = Vec::new();
    let mut k = 0usize;
    let mut best_k = 0usize;
    let mut draws = 0;
    while (k as f64 - target).abs() > slack {
        if draws >= spec.max_shapes {
            return Err(Error::PhantomUnreachable {
                target: spec.target_rho,
                best: best_k as f64 / n as f64,
            });
        }
        draws += 1;
        let mut shape = Ellipsoid {
            center: [0.0; 3],
            radii: [1.0; 3],
            value: spec.intensity_levels[rng.random_range(0..spec.intensity_levels.len())],
        };
        for a in 0..dim {
            let d = lattice.dims()[a] as f64;
            let (lo, hi) = (spec.radius_range.0 * d, spec.radius_range.1 * d);
            shape.radii[a] = if lo < hi { rng.random_range(lo..=hi) } else { lo };
            shape.center[a] = if spec.contained {
                // leave at least one background pixel between shape and border
                let r = shape.radii[a].min((d - 3.0) / 2.0).max(0.0);
                shape.radii[a] = r;
                let (lo, hi) = (r + 1.0, d - 2.0 - r);
                if lo < hi { rng.random_range(lo..=hi) } else { (d - 1.0) / 2.0 }
            } else {
                rng.random_range(0.0..=d - 1.0)
            };
        }
        let bbox = shape.bbox(&lattice);
        let mut changed = Vec::new();
        for_each_in_box(&lattice, bbox, |v, c| {
            if shape.contains(dim, c) && u[v] != shape.value {
                changed.push((v, u[v]));
            }
        });
        if changed.is_empty() {
            continue;
        }
        let before = local_k(&lattice, &u, bbox);
        for &(v, _) in &changed {
            u[v] = shape.value;
        }
        let after = local_k(&lattice, &u, bbox);
        let new_k = k + after - before;
        if new_k as f64 <= upper {
            k = new_k;
            shapes.push(shape);
            if (k as f64 - target).abs() < (best_k as f64 - target).abs() {
                best_k = k;
            }
        } else {
            for &(v, old) in &changed {
                u[v] = old;
            }
        }
    }
    debug_assert_eq!(k, lattice.gradient_sparsity(&u, 0.0));
    let image = Image::new(lattice, u)?;
    Ok(Phantom {
        ell: lattice.p() - k,
        rho: k as f64 / n as f64,
        image,
        shapes,
        k,
        draws,
    })
}

/// Nested axis-aligned ellipsoids in the spirit of the 3D Shepp-Logan head,
/// on normalized coordinates `[-1, 1]³`: (center, semi-axes, intensity).
const HEAD_LAYERS: [([f64; 3], [f64; 3], f64); 10] = [
    ([0.0, 0.0, 0.0], [0.92, 0.69, 0.90], 1.0),
    ([0.0, -0.0184, 0.0], [0.874, 0.6624, 0.880], 0.2),
    ([0.0, 0.0, 0.22], [0.31, 0.11, 0.22], 0.4),
    ([0.0, 0.0, -0.22], [0.41, 0.16, 0.28], 0.4),
    ([0.35, 0.0, 0.0], [0.25, 0.21, 0.41], 0.5),
    ([0.1, 0.0, 0.0], [0.046, 0.046, 0.05], 0.6),
    ([-0.1, 0.0, 0.0], [0.046, 0.046, 0.05], 0.6),
    ([-0.605, -0.08, 0.0], [0.046, 0.023, 0.05], 0.7),
    ([-0.605, 0.0, 0.06], [0.023, 0.023, 0.02], 0.8),
    ([-0.605, 0.06, 0.0], [0.023, 0.046, 0.02], 0.7),
];

pub const HEAD_LAYER_COUNT: usize = HEAD_LAYERS.len();

/// Layered head phantom using the first `layers` ellipsoids of a fixed table.
pub fn shepp_logan_like(lattice: &Lattice, layers: usize) -> Result<Image> {
    if lattice.dim() != 3 || !lattice.is_cubic() {
        return Err(Error::invalid("the head phantom needs a cubic 3D lattice"));
    }
    if layers > HEAD_LAYERS.len() {
        return Err(Error::invalid(format!("at most {} layers", HEAD_LAYERS.len())));
    }
    let d = lattice.dims()[0] as f64;
    let half = (d - 1.0) / 2.0;
    let shapes: Vec<Ellipsoid> = HEAD_LAYERS[..layers]
        .iter()
        .map(|&(c, r, value)| Ellipsoid {
            center: c.map(|x| half + x * half),
            radii: r.map(|x| x * half),
            value,
        })
        .collect();
    Image::new(*lattice, paint(lattice, 0.0, &shapes))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ImageSidecar {
    pub dims: Vec<usize>,
    pub seed: Option<u64>,
    pub spec: Option<PhantomSpec>,
    pub k: usize,
    pub ell: usize,
}

/// Writes `<prefix>.raw` (little-endian f64) and `<prefix>.json`.
pub fn write_image(prefix: &Path, image: &Image, spec: Option<&PhantomSpec>) -> Result<()> {
    let bytes: Vec<u8> = image.values().iter().flat_map(|v| v.to_le_bytes()).collect();
    std::fs::write(prefix.with_extension("raw"), bytes)?;
    let sidecar = ImageSidecar {
        dims: image.lattice().dims().to_vec(),
        seed: spec.map(|s| s.seed),
        spec: spec.cloned(),
        k: image.k(),
        ell: image.ell(),
    };
    std::fs::write(prefix.with_extension("json"), serde_json::to_string_pretty(&sidecar)?)?;
    Ok(())
}

/// Reads an image written by [`write_image`]; `path` may name either file.
pub fn read_image(path: &Path) -> Result<Image> {
    let sidecar: ImageSidecar =
        serde_json::from_str(&std::fs::read_to_string(path.with_extension("json"))?)?;
    let lattice = Lattice::new(&sidecar.dims)?;
    let bytes = std::fs::read(path.with_extension("raw"))?;
    if bytes.len() != 8 * lattice.n() {
        return Err(Error::Parse(format!(
            "raw file has {} bytes, expected {}",
            bytes.len(),
            8 * lattice.n()
        )));
    }
    let values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    Image::new(lattice, values)
}
