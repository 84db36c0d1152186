use std::fmt;
use std::str::FromStr;

/// Analytic test functions with closed-form derivatives.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Builtin {
    /// Vector field `(y, -x, 0.1)`; its streamlines are helices about the z-axis.
    Helix,
    /// `x⁶ + y⁶ + z⁶`, a rounded cube at level 1.
    Superquadric,
    /// `z² sin(x² + y² + z²)`.
    Ridgefn,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
#[error("unknown builtin function `{0}` (expected helix, superquadric or ridgefn)")]
pub struct UnknownFunction(pub String);

pub fn builtin_function(name: &str) -> Result<Builtin, UnknownFunction> {
    name.parse()
}

impl FromStr for Builtin {
    type Err = UnknownFunction;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "helix" => Ok(Builtin::Helix),
            "superquadric" => Ok(Builtin::Superquadric),
            "ridgefn" => Ok(Builtin::Ridgefn),
            other => Err(UnknownFunction(other.to_string())),
        }
    }
}

impl fmt::Display for Builtin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Builtin::Helix => "helix",
            Builtin::Superquadric => "superquadric",
            Builtin::Ridgefn => "ridgefn",
        })
    }
}

impl Builtin {
    /// Number of value components (1 or 3).
    pub fn components(self) -> usize {
        match self {
            Builtin::Helix => 3,
            _ => 1,
        }
    }

    /// Writes the value at `p` into `out[..components()]`.
    pub fn eval_into(self, p: [f64; 3], out: &mut [f64]) {
        match self {
            Builtin::Helix => out[..3].copy_from_slice(&helix(p)),
            _ => out[0] = self.scalar(p),
        }
    }

    /// Scalar value; panics for the vector-valued helix field.
    pub fn scalar(self, p: [f64; 3]) -> f64 {
        let [x, y, z] = p;
        match self {
            Builtin::Superquadric => x.powi(6) + y.powi(6) + z.powi(6),
            Builtin::Ridgefn => z * z * (x * x + y * y + z * z).sin(),
            Builtin::Helix => panic!("helix is vector valued"),
        }
    }

    pub fn gradient(self, p: [f64; 3]) -> [f64; 3] {
        let [x, y, z] = p;
        match self {
            Builtin::Superquadric => [6.0 * x.powi(5), 6.0 * y.powi(5), 6.0 * z.powi(5)],
            Builtin::Ridgefn => {
                let r2 = x * x + y * y + z * z;
                let (s, c) = r2.sin_cos();
                [
                    2.0 * x * z * z * c,
                    2.0 * y * z * z * c,
                    2.0 * z * s + 2.0 * z.powi(3) * c,
                ]
            }
            Builtin::Helix => panic!("helix is vector valued"),
        }
    }

    pub fn hessian(self, p: [f64; 3]) -> [[f64; 3]; 3] {
        match self {
            Builtin::Superquadric => {
                let mut h = [[0.0; 3]; 3];
                for k in 0..3 {
                    h[k][k] = 30.0 * p[k].powi(4);
                }
                h
            }
            Builtin::Ridgefn => {
                let z = p[2];
                let r2 = p.iter().map(|v| v * v).sum::<f64>();
                let (s, c) = r2.sin_cos();
                let mut h = [[0.0; 3]; 3];
                for i in 0..3 {
                    for j in 0..3 {
                        // z² ∂ᵢ∂ⱼ sin(r²)
                        let delta = if i == j { 1.0 } else { 0.0 };
                        let mut v = z * z * (2.0 * c * delta - 4.0 * p[i] * p[j] * s);
                        // cross terms from ∂(z²) ∂(sin r²)
                        if i == 2 {
                            v += 4.0 * z * p[j] * c;
                        }
                        if j == 2 {
                            v += 4.0 * z * p[i] * c;
                        }
                        if i == 2 && j == 2 {
                            v += 2.0 * s;
                        }
                        h[i][j] = v;
                    }
                }
                h
            }
            Builtin::Helix => panic!("helix is vector valued"),
        }
    }
}

fn helix(p: [f64; 3]) -> [f64; 3] {
    [p[1], -p[0], 0.1]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formulas() {
        let mut v = [0.0; 3];
        Builtin::Helix.eval_into([1.0, 2.0, 3.0], &mut v);
        assert_eq!(v, [2.0, -1.0, 0.1]);
        assert_eq!(Builtin::Superquadric.scalar([1.0, 0.0, 0.0]), 1.0);
        let z: f64 = 1.3;
        assert_eq!(Builtin::Ridgefn.scalar([0.0, 0.0, z]), z * z * (z * z).sin());
        assert_eq!(builtin_function("nope"), Err(UnknownFunction("nope".into())));
        assert_eq!(builtin_function("ridgefn"), Ok(Builtin::Ridgefn));
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let h = 1e-5;
        for f in [Builtin::Superquadric, Builtin::Ridgefn] {
            let p = [0.7, -0.4, 1.1];
            let g = f.gradient(p);
            let hs = f.hessian(p);
            for k in 0..3 {
                let mut pp = p;
                let mut pm = p;
                pp[k] += h;
                pm[k] -= h;
                let fd = (f.scalar(pp) - f.scalar(pm)) / (2.0 * h);
                assert!((fd - g[k]).abs() < 1e-8 * (1.0 + g[k].abs()));
                let gp = f.gradient(pp);
                let gm = f.gradient(pm);
                for i in 0..3 {
                    let fd = (gp[i] - gm[i]) / (2.0 * h);
                    assert!((fd - hs[i][k]).abs() < 1e-7 * (1.0 + fd.abs()), "{f} {i}{k}");
                }
            }
        }
    }
}
