use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::grid::{Cube, DyadicGrid};
use crate::error::{config, Error, Result};
use crate::scalar::Scalar;

/// A function constant on each leaf cell of a [`DyadicGrid`].
///
/// Values are kept in the grid's storage (Z-order) so that the leaves of any
/// cube are the contiguous slice [`DyadicGrid::leaf_range`]. Use
/// [`GridFunction::from_row_major`] / [`GridFunction::to_row_major`] to
/// exchange values in row-major leaf order.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction<T = f64> {
    grid: DyadicGrid,
    values: Vec<T>,
}

pub type ComplexFunction = GridFunction<Complex64>;

impl<T: Scalar> GridFunction<T> {
    pub fn constant(grid: &DyadicGrid, c: T) -> Self {
        Self {
            grid: grid.clone(),
            values: vec![c; grid.leaf_count()],
        }
    }

    pub fn zeros(grid: &DyadicGrid) -> Self {
        Self::constant(grid, T::zero())
    }

    /// Values given in row-major leaf order.
    pub fn from_row_major(grid: &DyadicGrid, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.leaf_count() {
            return Err(config(format!(
                "expected {} leaf values, got {}",
                grid.leaf_count(),
                values.len()
            )));
        }
        if grid.dim() == 1 {
            return Ok(Self {
                grid: grid.clone(),
                values,
            });
        }
        let mut out = vec![T::zero(); values.len()];
        for (r, v) in values.into_iter().enumerate() {
            out[grid.storage_of_row_major(r)] = v;
        }
        Ok(Self {
            grid: grid.clone(),
            values: out,
        })
    }

    /// Values given in storage order.
    pub fn from_storage(grid: &DyadicGrid, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.leaf_count() {
            return Err(config(format!(
                "expected {} leaf values, got {}",
                grid.leaf_count(),
                values.len()
            )));
        }
        Ok(Self {
            grid: grid.clone(),
            values,
        })
    }

    /// Evaluates `f` at the index vector of every leaf.
    pub fn from_leaf_fn(grid: &DyadicGrid, f: impl Fn(&[u64]) -> T) -> Self {
        let d = grid.depth();
        let values = (0..grid.leaf_count())
            .map(|s| f(&grid.cube_at(d, s).index()))
            .collect();
        Self {
            grid: grid.clone(),
            values,
        }
    }

    /// `c` on the leaves of `q`, zero elsewhere.
    pub fn indicator(grid: &DyadicGrid, q: &Cube, c: T) -> Self {
        let mut f = Self::zeros(grid);
        for v in &mut f.values[grid.leaf_range(q)] {
            *v = c;
        }
        f
    }

    pub fn grid(&self) -> &DyadicGrid {
        &self.grid
    }

    /// Values in storage order.
    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn to_row_major(&self) -> Vec<T> {
        if self.grid.dim() == 1 {
            return self.values.clone();
        }
        (0..self.values.len())
            .map(|r| self.values[self.grid.storage_of_row_major(r)])
            .collect()
    }

    /// Values on the leaves of `q`.
    pub fn on(&self, q: &Cube) -> &[T] {
        &self.values[self.grid.leaf_range(q)]
    }

    pub fn ensure_same_grid<U>(&self, other: &GridFunction<U>) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "functions live on different grids ({:?} vs {:?})",
                self.grid, other.grid
            )))
        }
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(T) -> U) -> GridFunction<U> {
        GridFunction {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map<U: Scalar, V: Scalar>(
        &self,
        other: &GridFunction<U>,
        f: impl Fn(T, U) -> V,
    ) -> Result<GridFunction<V>> {
        self.ensure_same_grid(other)?;
        Ok(GridFunction {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn scale(&self, c: T) -> Self {
        self.map(|v| v * c)
    }

    pub fn abs(&self) -> GridFunction<f64> {
        self.map(|v| v.modulus())
    }

    pub fn exp(&self) -> Self {
        self.map(|v| v.exp())
    }

    pub fn re(&self) -> GridFunction<f64> {
        self.map(|v| v.re())
    }

    pub fn to_complex(&self) -> ComplexFunction {
        self.map(|v| Complex64::new(v.re(), v.im()))
    }

    /// `∫ f` over the root cube.
    pub fn integral(&self) -> T {
        let s: T = self.values.iter().copied().sum();
        s.scale(self.grid.leaf_measure())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.modulus()))
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| v.modulus() == 0.0)
    }

    /// Max pointwise distance to `other`.
    pub fn max_diff(&self, other: &Self) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (&a, &b)| m.max((a - b).modulus()))
    }

    /// Averages of every cube, indexed `[level][pos]`; the last level holds the
    /// leaf values themselves.
    pub fn average_pyramid(&self) -> Vec<Vec<T>> {
        average_pyramid(&self.grid, self.values.clone())
    }

    /// The same physical function expressed on another shift of the grid.
    pub fn regrid(&self, target: &DyadicGrid) -> Result<Self> {
        if !self.grid.same_shape(target) {
            return Err(Error::GridMismatch(
                "regrid requires equal dimension and depth".into(),
            ));
        }
        let side = 1u64 << self.grid.depth();
        let dim = self.grid.dim();
        let d = self.grid.depth();
        let src = &self.grid;
        let values = (0..target.leaf_count())
            .map(|s| {
                let j = target.cube_at(d, s).index();
                let i: Vec<u64> = (0..dim)
                    .map(|c| (j[c] + target.shift()[c] + side - src.shift()[c]) % side)
                    .collect();
                let q = src.cube(d, &i).expect("index in range");
                self.values[q.pos()]
            })
            .collect();
        Ok(Self {
            grid: target.clone(),
            values,
        })
    }
}

/// Bottom-up averages, `[level][pos]`, from leaf values in storage order.
pub(crate) fn average_pyramid<T: Scalar>(grid: &DyadicGrid, leaves: Vec<T>) -> Vec<Vec<T>> {
    let n = grid.children_per_cube();
    let inv = 1.0 / n as f64;
    let mut levels = vec![leaves];
    for _ in 0..grid.depth() {
        let prev = levels.last().unwrap();
        let next: Vec<T> = prev
            .chunks_exact(n)
            .map(|c| c.iter().copied().sum::<T>().scale(inv))
            .collect();
        levels.push(next);
    }
    levels.reverse();
    levels
}

impl<'a, T: Scalar> Add for &'a GridFunction<T> {
    type Output = GridFunction<T>;
    fn add(self, rhs: Self) -> GridFunction<T> {
        self.zip_map(rhs, |a, b| a + b).expect("operands on the same grid")
    }
}

impl<'a, T: Scalar> Sub for &'a GridFunction<T> {
    type Output = GridFunction<T>;
    fn sub(self, rhs: Self) -> GridFunction<T> {
        self.zip_map(rhs, |a, b| a - b).expect("operands on the same grid")
    }
}

impl<'a, T: Scalar> Mul for &'a GridFunction<T> {
    type Output = GridFunction<T>;
    fn mul(self, rhs: Self) -> GridFunction<T> {
        self.zip_map(rhs, |a, b| a * b).expect("operands on the same grid")
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum ValuesRepr {
    Real(Vec<f64>),
    Complex(Vec<[f64; 2]>),
}

#[derive(Serialize, Deserialize)]
struct FunctionRepr {
    dim: usize,
    depth: u32,
    #[serde(default)]
    shift: Option<Vec<f64>>,
    #[serde(default)]
    complex: bool,
    values: ValuesRepr,
}

impl<T: Scalar> Serialize for GridFunction<T> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let rm = self.to_row_major();
        let values = if T::IS_COMPLEX {
            ValuesRepr::Complex(rm.iter().map(|v| [v.re(), v.im()]).collect())
        } else {
            ValuesRepr::Real(rm.iter().map(|v| v.re()).collect())
        };
        FunctionRepr {
            dim: self.grid.dim(),
            depth: self.grid.depth(),
            shift: Some(self.grid.offsets()),
            complex: T::IS_COMPLEX,
            values,
        }
        .serialize(s)
    }
}

impl<'de, T: Scalar> Deserialize<'de> for GridFunction<T> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let r = FunctionRepr::deserialize(d)?;
        let offsets = r.shift.unwrap_or_else(|| vec![0.0; r.dim]);
        let grid = DyadicGrid::with_offsets(r.dim, r.depth, &offsets).map_err(D::Error::custom)?;
        let values: Vec<T> = match r.values {
            ValuesRepr::Real(v) => {
                if r.complex && !v.is_empty() {
                    return Err(D::Error::custom(
                        "\"complex\": true requires [re, im] pairs",
                    ));
                }
                v.into_iter().map(T::from_real).collect()
            }
            ValuesRepr::Complex(v) => {
                if !r.complex {
                    return Err(D::Error::custom(
                        "[re, im] pairs require \"complex\": true",
                    ));
                }
                if !T::IS_COMPLEX && v.iter().any(|p| p[1] != 0.0) {
                    return Err(D::Error::custom("expected a real-valued function"));
                }
                v.into_iter().map(|p| T::from_parts(p[0], p[1])).collect()
            }
        };
        GridFunction::from_row_major(&grid, values).map_err(D::Error::custom)
    }
}

/// A serialized function of either scalar kind.
#[derive(Clone, Debug, PartialEq)]
pub enum AnyGridFunction {
    Real(GridFunction<f64>),
    Complex(ComplexFunction),
}

impl AnyGridFunction {
    pub fn from_json(s: &str) -> Result<Self> {
        let v: serde_json::Value = serde_json::from_str(s)?;
        let complex = v.get("complex").and_then(|c| c.as_bool()).unwrap_or(false);
        Ok(if complex {
            AnyGridFunction::Complex(serde_json::from_value(v)?)
        } else {
            AnyGridFunction::Real(serde_json::from_value(v)?)
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(match self {
            AnyGridFunction::Real(f) => serde_json::to_string(f)?,
            AnyGridFunction::Complex(f) => serde_json::to_string(f)?,
        })
    }
}
