//! Named-tensor views over parameter structs, plus the Adam optimizer.
//!
//! Every parameter struct doubles as its own gradient container: a gradient
//! is a value of the same type produced by [`Params::zeros_like`].
//!
//! Parameter values are kept exactly representable in 32 bits (compute runs
//! in 64 bits), so a model written as little-endian `f32` reloads bit-exact.

use ndarray::{Array1, Array2};
use rand::Rng;
use serde::{Deserialize, Serialize};

pub struct Entry<'a> {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: &'a [f64],
}

pub struct EntryMut<'a> {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: &'a mut [f64],
}

pub trait ParamTree {
    fn collect<'a>(&'a self, name: String, out: &mut Vec<Entry<'a>>);
    fn collect_mut<'a>(&'a mut self, name: String, out: &mut Vec<EntryMut<'a>>);
}

fn join(prefix: &str, field: &str) -> String {
    if prefix.is_empty() {
        field.to_string()
    } else {
        format!("{prefix}.{field}")
    }
}

impl ParamTree for Array1<f64> {
    fn collect<'a>(&'a self, name: String, out: &mut Vec<Entry<'a>>) {
        out.push(Entry {
            name,
            shape: vec![self.len()],
            data: self.as_slice().expect("standard layout"),
        });
    }

    fn collect_mut<'a>(&'a mut self, name: String, out: &mut Vec<EntryMut<'a>>) {
        let shape = vec![self.len()];
        out.push(EntryMut {
            name,
            shape,
            data: self.as_slice_mut().expect("standard layout"),
        });
    }
}

impl ParamTree for Array2<f64> {
    fn collect<'a>(&'a self, name: String, out: &mut Vec<Entry<'a>>) {
        out.push(Entry {
            name,
            shape: self.shape().to_vec(),
            data: self.as_slice().expect("standard layout"),
        });
    }

    fn collect_mut<'a>(&'a mut self, name: String, out: &mut Vec<EntryMut<'a>>) {
        let shape = self.shape().to_vec();
        out.push(EntryMut {
            name,
            shape,
            data: self.as_slice_mut().expect("standard layout"),
        });
    }
}

impl<T: ParamTree> ParamTree for Vec<T> {
    fn collect<'a>(&'a self, name: String, out: &mut Vec<Entry<'a>>) {
        for (i, t) in self.iter().enumerate() {
            t.collect(join(&name, &i.to_string()), out);
        }
    }

    fn collect_mut<'a>(&'a mut self, name: String, out: &mut Vec<EntryMut<'a>>) {
        for (i, t) in self.iter_mut().enumerate() {
            t.collect_mut(join(&name, &i.to_string()), out);
        }
    }
}

impl<T: ParamTree> ParamTree for Option<T> {
    fn collect<'a>(&'a self, name: String, out: &mut Vec<Entry<'a>>) {
        if let Some(t) = self {
            t.collect(name, out);
        }
    }

    fn collect_mut<'a>(&'a mut self, name: String, out: &mut Vec<EntryMut<'a>>) {
        if let Some(t) = self {
            t.collect_mut(name, out);
        }
    }
}

/// Implements [`ParamTree`] for a struct by listing its tensor-bearing fields.
#[macro_export]
macro_rules! param_tree {
    ($ty:ty { $($field:ident),* $(,)? }) => {
        impl $crate::params::ParamTree for $ty {
            fn collect<'a>(&'a self, name: String, out: &mut Vec<$crate::params::Entry<'a>>) {
                $( $crate::params::ParamTree::collect(&self.$field, $crate::params::join_name(&name, stringify!($field)), out); )*
            }
            fn collect_mut<'a>(&'a mut self, name: String, out: &mut Vec<$crate::params::EntryMut<'a>>) {
                $( $crate::params::ParamTree::collect_mut(&mut self.$field, $crate::params::join_name(&name, stringify!($field)), out); )*
            }
        }
    };
}

#[doc(hidden)]
pub fn join_name(prefix: &str, field: &str) -> String {
    join(prefix, field)
}

pub trait Params: ParamTree + Clone {
    fn entries(&self) -> Vec<Entry<'_>> {
        let mut out = Vec::new();
        self.collect(String::new(), &mut out);
        out
    }

    fn entries_mut(&mut self) -> Vec<EntryMut<'_>> {
        let mut out = Vec::new();
        self.collect_mut(String::new(), &mut out);
        out
    }

    fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        for e in z.entries_mut() {
            e.data.fill(0.0);
        }
        z
    }

    fn add_assign(&mut self, other: &Self) {
        for (a, b) in self.entries_mut().into_iter().zip(other.entries()) {
            for (x, y) in a.data.iter_mut().zip(b.data) {
                *x += y;
            }
        }
    }

    fn scale(&mut self, s: f64) {
        for e in self.entries_mut() {
            e.data.iter_mut().for_each(|x| *x *= s);
        }
    }

    fn sq_norm(&self) -> f64 {
        self.entries()
            .iter()
            .flat_map(|e| e.data.iter())
            .map(|x| x * x)
            .sum()
    }

    fn num_scalars(&self) -> usize {
        self.entries().iter().map(|e| e.data.len()).sum()
    }

    fn all_finite(&self) -> bool {
        self.entries()
            .iter()
            .all(|e| e.data.iter().all(|x| x.is_finite()))
    }

    /// Rounds every value to the nearest 32-bit float.
    fn round_to_f32(&mut self) {
        for e in self.entries_mut() {
            e.data.iter_mut().for_each(|x| *x = *x as f32 as f64);
        }
    }
}

impl<T: ParamTree + Clone> Params for T {}

/// Uniform Xavier/Glorot initialization of a `rows x cols` matrix.
pub fn xavier<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> Array2<f64> {
    let bound = (6.0 / (rows + cols) as f64).sqrt();
    Array2::from_shape_fn((rows, cols), |_| rng.gen_range(-bound..bound) as f32 as f64)
}

pub fn normal_init<R: Rng>(rng: &mut R, rows: usize, cols: usize, std: f64) -> Array2<f64> {
    // Box-Muller; rand_distr is not worth a dependency for this.
    Array2::from_shape_fn((rows, cols), |_| {
        let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
        let u2: f64 = rng.gen();
        ((-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos() * std) as f32 as f64
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Global gradient-norm clip; non-positive disables clipping.
    pub clip_norm: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            clip_norm: 5.0,
        }
    }
}

pub struct Adam {
    config: AdamConfig,
    step: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(config: AdamConfig) -> Self {
        Adam {
            config,
            step: 0,
            m: Vec::new(),
            v: Vec::new(),
        }
    }

    pub fn config(&self) -> &AdamConfig {
        &self.config
    }

    /// One update. Returns the gradient norm before clipping.
    pub fn update<P: Params>(&mut self, params: &mut P, grads: &P) -> f64 {
        let norm = grads.sq_norm().sqrt();
        let clip = if self.config.clip_norm > 0.0 && norm > self.config.clip_norm {
            self.config.clip_norm / norm
        } else {
            1.0
        };
        let mut entries = params.entries_mut();
        let grad_entries = grads.entries();
        if self.m.is_empty() {
            self.m = entries.iter().map(|e| vec![0.0; e.data.len()]).collect();
            self.v = self.m.clone();
        }
        assert_eq!(self.m.len(), entries.len(), "parameter layout changed under optimizer");
        self.step += 1;
        let c = &self.config;
        let bc1 = 1.0 - c.beta1.powi(self.step as i32);
        let bc2 = 1.0 - c.beta2.powi(self.step as i32);
        for (k, (p, g)) in entries.iter_mut().zip(&grad_entries).enumerate() {
            let (m, v) = (&mut self.m[k], &mut self.v[k]);
            for i in 0..p.data.len() {
                let gi = g.data[i] * clip;
                m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * gi;
                v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * gi * gi;
                let update = c.lr * (m[i] / bc1) / ((v[i] / bc2).sqrt() + c.eps);
                p.data[i] = (p.data[i] - update) as f32 as f64;
            }
        }
        norm
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[derive(Clone)]
    struct Toy {
        w: Array2<f64>,
        b: Array1<f64>,
        layers: Vec<Array1<f64>>,
    }
    param_tree!(Toy { w, b, layers });

    fn toy() -> Toy {
        Toy {
            w: array![[1.0, 2.0], [3.0, 4.0]],
            b: array![0.5, -0.5],
            layers: vec![array![1.0], array![2.0]],
        }
    }

    #[test]
    fn entries_are_named_in_field_order() {
        let t = toy();
        let names: Vec<String> = t.entries().into_iter().map(|e| e.name).collect();
        assert_eq!(names, vec!["w", "b", "layers.0", "layers.1"]);
        assert_eq!(t.num_scalars(), 8);
    }

    #[test]
    fn zeros_and_add() {
        let t = toy();
        let mut z = t.zeros_like();
        assert_eq!(z.sq_norm(), 0.0);
        z.add_assign(&t);
        z.add_assign(&t);
        z.scale(0.5);
        assert_eq!(z.w, t.w);
    }

    #[test]
    fn adam_minimizes_quadratic() {
        let mut p = toy();
        let mut opt = Adam::new(AdamConfig {
            lr: 0.05,
            ..Default::default()
        });
        for _ in 0..500 {
            let g = p.clone(); // gradient of 0.5 * |p|^2
            opt.update(&mut p, &g);
        }
        assert!(p.sq_norm() < 1e-3, "{}", p.sq_norm());
    }

    #[test]
    fn clipping_reports_raw_norm() {
        let mut p = toy();
        let mut g = toy();
        g.scale(100.0);
        let mut opt = Adam::new(AdamConfig::default());
        let n = opt.update(&mut p, &g);
        assert!((n - 100.0 * toy().sq_norm().sqrt()).abs() < 1e-9);
    }
}
