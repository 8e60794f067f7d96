//! Per-subcarrier channel vectors for a BS uniform planar array.
//!
//! For each path ℓ with receive power ρ, phase ϑ, delay τ and departure
//! angles (az, el), subcarrier k of an OFDM system with K subcarriers and
//! bandwidth B contributes
//!
//! ```text
//! h_k += sqrt(ρ / K) · exp(j (ϑ + 2π (k-1) τ B / K)) · a(az, el)
//! ```
//!
//! where `a = a_z ⊗ a_y ⊗ a_x` and the per-axis responses have element phases
//! `m·kd·sin(el)cos(az)`, `m·kd·sin(el)sin(az)` and `m·kd·cos(el)` with
//! `kd = 2π·spacing` (spacing in wavelengths). Each axis runs to its own
//! `M_axis - 1`. Subcarrier labels are 1-based, so subcarrier 1 carries zero
//! frequency offset.

use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::genparams::{subcarrier_set, ParamSet};
use crate::tracer::{PathList, PathRecord};

/// Unit-modulus array response, length `M_x·M_y·M_z`, element
/// `(m_x, m_y, m_z)` at index `m_z·M_y·M_x + m_y·M_x + m_x`.
#[derive(Debug, Clone, PartialEq)]
pub struct SteeringVector(pub Vec<Complex64>);

impl SteeringVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.0
    }
}

fn axis_response(n: usize, phase_step: f64) -> Vec<Complex64> {
    (0..n)
        .map(|m| Complex64::from_polar(1.0, m as f64 * phase_step))
        .collect()
}

/// Array response for departure angles in radians (elevation from +z).
pub fn array_response(az: f64, el: f64, dims: (usize, usize, usize), spacing: f64) -> SteeringVector {
    let (mx, my, mz) = dims;
    let kd = TAU * spacing;
    let ax = axis_response(mx, kd * el.sin() * az.cos());
    let ay = axis_response(my, kd * el.sin() * az.sin());
    let az_ = axis_response(mz, kd * el.cos());
    let mut out = Vec::with_capacity(mx * my * mz);
    for z in &az_ {
        for y in &ay {
            let zy = z * y;
            out.extend(ax.iter().map(|x| zy * x));
        }
    }
    SteeringVector(out)
}

/// `M × |𝒦|` complex matrix, column-major: column j is the channel at the
/// j-th selected subcarrier.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix {
    pub bs_id: u32,
    pub user_index: u64,
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ChannelMatrix {
    pub fn zeros(bs_id: u32, user_index: u64, rows: usize, cols: usize) -> Self {
        ChannelMatrix {
            bs_id,
            user_index,
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    /// Wraps column-major data.
    pub fn from_column_major(
        bs_id: u32,
        user_index: u64,
        rows: usize,
        cols: usize,
        data: Vec<Complex64>,
    ) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                actual: data.len(),
            });
        }
        Ok(ChannelMatrix {
            bs_id,
            user_index,
            rows,
            cols,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[col * self.rows + row]
    }

    pub fn column(&self, col: usize) -> &[Complex64] {
        &self.data[col * self.rows..(col + 1) * self.rows]
    }

    pub fn row(&self, row: usize) -> Vec<Complex64> {
        (0..self.cols).map(|c| self.get(row, c)).collect()
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, s: f64) -> ChannelMatrix {
        ChannelMatrix {
            data: self.data.iter().map(|c| c * s).collect(),
            ..self.clone()
        }
    }
}

/// Frequency-domain coefficient of one path on 1-based subcarrier `k`.
fn path_coefficient(p: &PathRecord, k: u32, num_ofdm: f64, bandwidth_hz: f64) -> Complex64 {
    let k0 = f64::from(k - 1);
    let amplitude = (p.power / num_ofdm).sqrt();
    Complex64::from_polar(amplitude, p.phase + TAU * k0 / num_ofdm * p.delay * bandwidth_hz)
}

fn path_response(p: &PathRecord, params: &ParamSet) -> SteeringVector {
    array_response(
        p.aod_az.to_radians(),
        p.aod_el.to_radians(),
        params.array_dims(),
        params.ant_spacing,
    )
}

/// Channel vector on 1-based subcarrier `k` from the strongest
/// `num_paths` of `paths` (fewer if fewer are available). An empty path
/// list gives the zero vector.
pub fn channel_vector(paths: &[PathRecord], k: u32, params: &ParamSet) -> Vec<Complex64> {
    let m = params.num_antennas();
    let mut h = vec![Complex64::new(0.0, 0.0); m];
    let k_total = f64::from(params.num_ofdm);
    for p in paths.iter().take(params.num_paths as usize) {
        let c = path_coefficient(p, k.max(1), k_total, params.bandwidth_hz());
        for (hi, ai) in h.iter_mut().zip(path_response(p, params).0) {
            *hi += c * ai;
        }
    }
    h
}

/// Builds channel matrices for one parameter set; caches the subcarrier set.
#[derive(Debug, Clone)]
pub struct ChannelBuilder {
    params: ParamSet,
    subcarriers: Vec<u32>,
}

impl ChannelBuilder {
    pub fn new(params: &ParamSet) -> Result<Self> {
        params.check()?;
        Ok(ChannelBuilder {
            params: params.clone(),
            subcarriers: subcarrier_set(params)?,
        })
    }

    pub fn subcarriers(&self) -> &[u32] {
        &self.subcarriers
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.params.num_antennas(), self.subcarriers.len())
    }

    pub fn build(&self, list: &PathList) -> ChannelMatrix {
        let (m, nk) = self.dims();
        let mut out = ChannelMatrix::zeros(list.bs_id, list.user_index, m, nk);
        let k_total = f64::from(self.params.num_ofdm);
        let bw = self.params.bandwidth_hz();
        for p in list.paths.iter().take(self.params.num_paths as usize) {
            let a = path_response(p, &self.params);
            for (j, &k) in self.subcarriers.iter().enumerate() {
                let c = path_coefficient(p, k, k_total, bw);
                let col = &mut out.data[j * m..(j + 1) * m];
                for (hi, ai) in col.iter_mut().zip(&a.0) {
                    *hi += c * ai;
                }
            }
        }
        out
    }
}

/// `M × |𝒦|` channel matrix for one (BS, user) pair.
pub fn channel_matrix(paths: &PathList, params: &ParamSet) -> Result<ChannelMatrix> {
    Ok(ChannelBuilder::new(params)?.build(paths))
}
