//! Height profiles: scalar functions of u given by finite coefficient
//! lists, used for twist maps, Hamiltonian terms and cutoff shapes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const TAU: f64 = std::f64::consts::TAU;

/// A function of u in [0, 1] in one of two finite bases.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "basis", rename_all = "snake_case")]
pub enum Profile {
    /// Bernstein expansion sum c_i B_{i,n}(u) of degree n = len - 1.
    Bernstein { coeffs: Vec<f64> },
    /// mean + sum_k cos_k cos(2 pi k u) + sin_k sin(2 pi k u),
    /// k starting at 1.
    Fourier {
        mean: f64,
        #[serde(default)]
        cos: Vec<f64>,
        #[serde(default)]
        sin: Vec<f64>,
    },
}

impl Profile {
    pub fn constant(c: f64) -> Profile {
        Profile::Bernstein { coeffs: vec![c] }
    }

    /// The unit bump 16 u^2 (1-u)^2: zero with zero slope at both ends,
    /// maximum exactly 1 at u = 1/2. As a Bernstein expansion the only
    /// nonzero coefficient is 8/3 on B_{2,4}.
    pub fn unit_bump() -> Profile {
        Profile::Bernstein { coeffs: vec![0.0, 0.0, 8.0 / 3.0, 0.0, 0.0] }
    }

    /// Rejects empty or non-finite coefficient lists.
    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            Profile::Bernstein { coeffs } => {
                !coeffs.is_empty() && coeffs.iter().all(|c| c.is_finite())
            }
            Profile::Fourier { mean, cos, sin } => {
                mean.is_finite()
                    && cos.iter().all(|c| c.is_finite())
                    && sin.iter().all(|c| c.is_finite())
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("bad profile {self:?}")))
        }
    }

    pub fn eval(&self, u: f64) -> f64 {
        match self {
            Profile::Bernstein { coeffs } => de_casteljau(coeffs, u),
            Profile::Fourier { mean, cos, sin } => {
                let mut v = *mean;
                for (k, c) in cos.iter().enumerate() {
                    v += c * (TAU * (k + 1) as f64 * u).cos();
                }
                for (k, s) in sin.iter().enumerate() {
                    v += s * (TAU * (k + 1) as f64 * u).sin();
                }
                v
            }
        }
    }

    pub fn derivative(&self, u: f64) -> f64 {
        match self {
            Profile::Bernstein { coeffs } => {
                let n = coeffs.len() - 1;
                if n == 0 {
                    return 0.0;
                }
                if n <= 8 {
                    let mut diff = [0.0f64; 8];
                    for i in 0..n {
                        diff[i] = n as f64 * (coeffs[i + 1] - coeffs[i]);
                    }
                    de_casteljau(&diff[..n], u)
                } else {
                    let diff: Vec<f64> = coeffs
                        .windows(2)
                        .map(|w| n as f64 * (w[1] - w[0]))
                        .collect();
                    de_casteljau(&diff, u)
                }
            }
            Profile::Fourier { cos, sin, .. } => {
                let mut v = 0.0;
                for (k, c) in cos.iter().enumerate() {
                    let w = TAU * (k + 1) as f64;
                    v -= c * w * (w * u).sin();
                }
                for (k, s) in sin.iter().enumerate() {
                    let w = TAU * (k + 1) as f64;
                    v += s * w * (w * u).cos();
                }
                v
            }
        }
    }

    /// The profile scaled by a constant factor.
    pub fn scale(&self, factor: f64) -> Profile {
        match self {
            Profile::Bernstein { coeffs } => Profile::Bernstein {
                coeffs: coeffs.iter().map(|c| factor * c).collect(),
            },
            Profile::Fourier { mean, cos, sin } => Profile::Fourier {
                mean: factor * mean,
                cos: cos.iter().map(|c| factor * c).collect(),
                sin: sin.iter().map(|s| factor * s).collect(),
            },
        }
    }

    /// The profile shifted by a constant offset.
    pub fn offset(&self, delta: f64) -> Profile {
        match self {
            Profile::Bernstein { coeffs } => Profile::Bernstein {
                coeffs: coeffs.iter().map(|c| delta + c).collect(),
            },
            Profile::Fourier { mean, cos, sin } => Profile::Fourier {
                mean: delta + mean,
                cos: cos.clone(),
                sin: sin.clone(),
            },
        }
    }

    /// Short form for map labels.
    pub fn label(&self) -> String {
        match self {
            Profile::Bernstein { coeffs } => {
                let cs: Vec<String> = coeffs.iter().map(|c| format!("{c:.4}")).collect();
                format!("bernstein[{}]", cs.join(", "))
            }
            Profile::Fourier { mean, cos, sin } => {
                format!("fourier(mean={mean:.4}, {} cos, {} sin)", cos.len(), sin.len())
            }
        }
    }
}

fn de_casteljau(coeffs: &[f64], u: f64) -> f64 {
    debug_assert!(!coeffs.is_empty());
    // Profiles are low degree and sit inside orbit loops; keep the
    // common case off the heap.
    let mut buf = [0.0f64; 8];
    let mut heap: Vec<f64>;
    let work: &mut [f64] = if coeffs.len() <= buf.len() {
        buf[..coeffs.len()].copy_from_slice(coeffs);
        &mut buf[..coeffs.len()]
    } else {
        heap = coeffs.to_vec();
        &mut heap
    };
    let mut m = work.len();
    while m > 1 {
        for i in 0..m - 1 {
            work[i] = (1.0 - u) * work[i] + u * work[i + 1];
        }
        m -= 1;
    }
    work[0]
}
