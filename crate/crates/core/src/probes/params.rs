//! Estimate kinds and their exact parameter-validity predicates.

use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

pub type Q = Ratio<i64>;

pub fn q(n: i64, d: i64) -> Q {
    Ratio::new(n, d)
}

pub fn to_f64(x: Q) -> f64 {
    x.to_f64().expect("finite rational")
}

/// Inequalities checked by the probe harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EstimateKind {
    /// `||U(t) u||_{L^8_{xt}} <= c ||u||_{L^2}`.
    L8Strichartz,
    /// `||U(t) u||_{L^4_t(dot H^{1/4,q})} <= c ||u_hat||_{L^{r'}}`, `1/r = 1/2 + 1/q`.
    Lemma4,
    /// `p = q = 3r` case of the general Airy estimate.
    FsAiry,
    /// `||U(t) u||_{L^p_t(dot H^{1/p,q})} <= c ||u_hat||_{L^{r'}}`, `1/r = 2/p + 1/q`.
    Cor3General,
    /// `||u||_{L^p_t(H^{1/p,q})} <= c ||u||_{X^r_{0,b}}`.
    Xnorm30,
    /// `||u||_{X^{r'}_{0,-b}} <= c ||u||_{L^{p'}_t(H^{-1/p,q'})}`.
    Xnorm31,
    /// `||I^{1/2} I^{1/2}_-(U u1, U u2)||_{L^2_{xt}} <= c ||u1|| ||u2||`.
    BilinearL3,
    /// `||I^s I^s_-(u, v)||_{L^2_{xt}} <= c ||u||_{X_{0,b}} ||v||_{X_{0,b~}}`.
    CorK1,
    /// `||I^s_+(I^s w, u)||_{X_{0,-b~}} <= c ||w||_{L^2_{xt}} ||u||_{X_{0,b}}`.
    CorK2,
    /// `||I^sigma_+(I^sigma w, u)||_{X^r_{0,b'}} <= c ||w||_{L^2_{xt}} ||u||_{X_{0,beta}}`.
    CorK10,
    /// `||psi_delta U *_R F||_{X^r_{s,b}} <= c delta^{1+b'-b} ||F||_{X^r_{s,b'}}`.
    Lemma2Delta,
    /// `||psi U u0||_{X^r_{s,b}} = ||psi||_{H^r_b} ||u0||_{H^r_s}`.
    Homog5,
    /// `X^{r1}_{s1,b1} in X^{r0}_{s0,b0}` with the explicit Hoelder constant.
    Embed4,
    /// `sup_t ||u(t)||_{H^r_s} <= C ||u||_{X^r_{s,b}}`.
    Embed52,
    /// `||d_x(u1 u2 u3)||_{X^r_{s,b'}} <= c prod ||u_i||_{X^r_{s,b}}`.
    TrilinearT2,
}

impl EstimateKind {
    pub const ALL: [EstimateKind; 15] = [
        EstimateKind::L8Strichartz,
        EstimateKind::Lemma4,
        EstimateKind::FsAiry,
        EstimateKind::Cor3General,
        EstimateKind::Xnorm30,
        EstimateKind::Xnorm31,
        EstimateKind::BilinearL3,
        EstimateKind::CorK1,
        EstimateKind::CorK2,
        EstimateKind::CorK10,
        EstimateKind::Lemma2Delta,
        EstimateKind::Homog5,
        EstimateKind::Embed4,
        EstimateKind::Embed52,
        EstimateKind::TrilinearT2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EstimateKind::L8Strichartz => "L8_STRICHARTZ",
            EstimateKind::Lemma4 => "LEMMA4",
            EstimateKind::FsAiry => "FS_AIRY",
            EstimateKind::Cor3General => "COR3_GENERAL",
            EstimateKind::Xnorm30 => "XNORM_30",
            EstimateKind::Xnorm31 => "XNORM_31",
            EstimateKind::BilinearL3 => "BILINEAR_L3",
            EstimateKind::CorK1 => "COR_K1",
            EstimateKind::CorK2 => "COR_K2",
            EstimateKind::CorK10 => "COR_K10",
            EstimateKind::Lemma2Delta => "LEMMA2_DELTA",
            EstimateKind::Homog5 => "HOMOG_5",
            EstimateKind::Embed4 => "EMBED_4",
            EstimateKind::Embed52 => "EMBED_52",
            EstimateKind::TrilinearT2 => "TRILINEAR_T2",
        }
    }

    /// Keys read by [`EstimateKind::check`]; everything else is ignored.
    pub fn keys(self) -> &'static [&'static str] {
        match self {
            EstimateKind::L8Strichartz | EstimateKind::BilinearL3 => &[],
            EstimateKind::Lemma4 => &["q"],
            EstimateKind::FsAiry => &["r"],
            EstimateKind::Cor3General => &["p", "q"],
            EstimateKind::Xnorm30 | EstimateKind::Xnorm31 => &["p", "q", "b"],
            EstimateKind::CorK1 | EstimateKind::CorK2 => &["s", "b", "b_tilde"],
            EstimateKind::CorK10 => &["r", "sigma", "b", "b_prime"],
            EstimateKind::Lemma2Delta => &["r", "s", "b", "b_prime"],
            EstimateKind::Homog5 | EstimateKind::Embed52 => &["r", "s", "b"],
            EstimateKind::Embed4 => &["r", "s", "b", "r0", "s0", "b0"],
            EstimateKind::TrilinearT2 => &["r", "s", "b", "b_prime"],
        }
    }

    /// Kinds whose right-hand side is a single spatial datum evolved freely.
    pub fn is_free_flow(self) -> bool {
        matches!(
            self,
            EstimateKind::L8Strichartz | EstimateKind::Lemma4 | EstimateKind::FsAiry | EstimateKind::Cor3General
        )
    }
}

impl fmt::Display for EstimateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EstimateKind {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_uppercase().replace('-', "_");
        EstimateKind::ALL
            .into_iter()
            .find(|k| k.name() == norm)
            .ok_or_else(|| LabError::Parameter(format!("unknown estimate kind `{s}`")))
    }
}

/// Exact parameters. For `COR_K10`, `b` is the exponent `beta`; for
/// `EMBED_4`, `(r, s, b)` is the source space and `(r0, s0, b0)` the target.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EstimateParams {
    pub r: Option<Q>,
    pub s: Option<Q>,
    pub b: Option<Q>,
    pub b_prime: Option<Q>,
    pub p: Option<Q>,
    pub q: Option<Q>,
    pub sigma: Option<Q>,
    pub b_tilde: Option<Q>,
    pub r0: Option<Q>,
    pub s0: Option<Q>,
    pub b0: Option<Q>,
}

impl EstimateParams {
    pub fn get(&self, key: &str) -> Option<Q> {
        match key {
            "r" => self.r,
            "s" => self.s,
            "b" => self.b,
            "b_prime" => self.b_prime,
            "p" => self.p,
            "q" => self.q,
            "sigma" => self.sigma,
            "b_tilde" => self.b_tilde,
            "r0" => self.r0,
            "s0" => self.s0,
            "b0" => self.b0,
            _ => None,
        }
    }

    pub fn set(&mut self, key: &str, v: Q) -> Result<()> {
        let slot = match key {
            "r" => &mut self.r,
            "s" => &mut self.s,
            "b" => &mut self.b,
            "b_prime" => &mut self.b_prime,
            "p" => &mut self.p,
            "q" => &mut self.q,
            "sigma" => &mut self.sigma,
            "b_tilde" => &mut self.b_tilde,
            "r0" => &mut self.r0,
            "s0" => &mut self.s0,
            "b0" => &mut self.b0,
            _ => return Err(LabError::Parameter(format!("unknown parameter `{key}`"))),
        };
        *slot = Some(v);
        Ok(())
    }

    pub const KEYS: [&'static str; 11] = ["r", "s", "b", "b_prime", "p", "q", "sigma", "b_tilde", "r0", "s0", "b0"];

    fn need(&self, key: &str) -> Result<Q> {
        self.get(key)
            .ok_or_else(|| LabError::Precondition(format!("missing parameter `{key}`")))
    }

    fn value(&self, key: &str) -> Result<f64> {
        self.need(key).map(to_f64)
    }

    pub fn f(&self, key: &str) -> f64 {
        self.get(key).map(to_f64).unwrap_or(f64::NAN)
    }
}

/// Parameters resolved for evaluation, including derived exponents.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Resolved {
    pub r: f64,
    pub s: f64,
    pub b: f64,
    pub b_prime: f64,
    pub p: f64,
    pub q: f64,
    pub sigma: f64,
    pub b_tilde: f64,
    pub r0: f64,
    pub s0: f64,
    pub b0: f64,
}

fn violated(msg: impl Into<String>) -> LabError {
    LabError::Precondition(msg.into())
}

fn require(cond: bool, msg: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(violated(msg))
    }
}

/// `1/r = 2/p + 1/q` under one of the admissible conditions of the general
/// linear Airy estimate. Returns `1/r`.
fn admissible_pq(p: Q, q: Q) -> Result<Q> {
    let zero = Q::zero();
    require(p >= Q::one() && q >= Q::one(), "p, q must be >= 1")?;
    let (ip, iq) = (p.recip(), q.recip());
    let quarter = q_(1, 4);
    let half = q_(1, 2);
    let case_i = zero <= ip && ip <= quarter && zero <= iq && iq < quarter;
    let case_ii = quarter <= iq && iq + ip < half;
    require(
        case_i || case_ii,
        "(p, q) must satisfy 0 <= 1/p <= 1/4, 0 <= 1/q < 1/4 or 1/4 <= 1/q <= 1/q + 1/p < 1/2 (linear Airy estimate; the endpoint (inf, 2) is not sampled)",
    )?;
    Ok(q_(2, 1) * ip + iq)
}

fn q_(n: i64, d: i64) -> Q {
    Ratio::new(n, d)
}

impl EstimateKind {
    /// Checks the hypotheses of the estimate exactly and resolves derived
    /// exponents.
    pub fn check(self, params: &EstimateParams) -> Result<Resolved> {
        let one = Q::one();
        let zero = Q::zero();
        let mut out = Resolved {
            r: f64::NAN,
            s: 0.0,
            b: f64::NAN,
            b_prime: f64::NAN,
            p: f64::NAN,
            q: f64::NAN,
            sigma: 0.0,
            b_tilde: f64::NAN,
            r0: f64::NAN,
            s0: f64::NAN,
            b0: f64::NAN,
        };
        match self {
            EstimateKind::L8Strichartz => {
                out.r = 2.0;
                out.p = 8.0;
                out.q = 8.0;
            }
            EstimateKind::BilinearL3 => {
                out.r = 2.0;
                out.s = 0.5;
            }
            EstimateKind::Lemma4 => {
                let qq = params.need("q")?;
                require(qq > q_(4, 1), "q must satisfy 4 < q < inf (Lemma 4)")?;
                let inv_r = q_(1, 2) + qq.recip();
                if let Some(r) = params.r {
                    require(r.recip() == inv_r, "r must satisfy 1/r = 1/2 + 1/q (Lemma 4)")?;
                }
                out.r = to_f64(inv_r.recip());
                out.p = 4.0;
                out.q = to_f64(qq);
                out.sigma = 0.25;
            }
            EstimateKind::FsAiry => {
                let r = params.need("r")?;
                require(r > q_(4, 3), "r must exceed 4/3 so that 1/p = 1/(3r) < 1/4 (Fefferman-Stein case)")?;
                out.r = to_f64(r);
                out.p = 3.0 * out.r;
                out.q = out.p;
                out.sigma = 1.0 / out.p;
            }
            EstimateKind::Cor3General | EstimateKind::Xnorm30 | EstimateKind::Xnorm31 => {
                let (p, qq) = (params.need("p")?, params.need("q")?);
                let inv_r = admissible_pq(p, qq)?;
                require(inv_r < one, "1/r = 2/p + 1/q must be below 1")?;
                if let Some(r) = params.r {
                    require(r.recip() == inv_r, "r must satisfy 1/r = 2/p + 1/q")?;
                }
                out.r = to_f64(inv_r.recip());
                out.p = to_f64(p);
                out.q = to_f64(qq);
                out.sigma = 1.0 / out.p;
                if self != EstimateKind::Cor3General {
                    let b = params.need("b")?;
                    require(b > inv_r, "b must exceed 1/r")?;
                    out.b = to_f64(b);
                }
            }
            EstimateKind::CorK1 | EstimateKind::CorK2 => {
                let (s, b, bt) = (params.need("s")?, params.need("b")?, params.need("b_tilde")?);
                require(b > q_(1, 2) && q_(1, 2) >= s && s >= zero, "need b > 1/2 >= s >= 0")?;
                require(bt > q_(1, 6) + q_(2, 3) * s, "need b~ > 1/6 + 2s/3")?;
                out.r = 2.0;
                out.s = to_f64(s);
                out.b = to_f64(b);
                out.b_tilde = to_f64(bt);
            }
            EstimateKind::CorK10 => {
                let (r, sigma, beta, bp) = (
                    params.need("r")?,
                    params.need("sigma")?,
                    params.need("b")?,
                    params.need("b_prime")?,
                );
                require(one < r && r <= q_(2, 1), "need 1 < r <= 2")?;
                let inv_rc = one - r.recip();
                require(zero <= sigma && sigma <= inv_rc && inv_rc < beta, "need 0 <= sigma <= 1/r' < beta")?;
                require(bp < -(inv_rc + q_(2, 1) * sigma) / q_(3, 1), "need b' < -(1/r' + 2 sigma)/3")?;
                out.r = to_f64(r);
                out.sigma = to_f64(sigma);
                out.b = to_f64(beta);
                out.b_prime = to_f64(bp);
            }
            EstimateKind::Lemma2Delta => {
                let (r, s, b, bp) = (
                    params.need("r")?,
                    params.get("s").unwrap_or(zero),
                    params.need("b")?,
                    params.need("b_prime")?,
                );
                require(r > one, "need 1 < r < inf (Lemma 2)")?;
                let inv_rc = one - r.recip();
                require(
                    bp + one >= b && b >= zero && zero >= bp && bp > -inv_rc,
                    "need b' + 1 >= b >= 0 >= b' > -1/r' (Lemma 2)",
                )?;
                out.r = to_f64(r);
                out.s = to_f64(s);
                out.b = to_f64(b);
                out.b_prime = to_f64(bp);
            }
            EstimateKind::Homog5 => {
                let r = params.need("r")?;
                require(r > one, "need r > 1")?;
                out.r = to_f64(r);
                out.s = params.value("s")?;
                out.b = params.value("b")?;
            }
            EstimateKind::Embed52 => {
                let (r, b) = (params.need("r")?, params.need("b")?);
                require(r > one, "need r > 1")?;
                require(b > r.recip(), "need b > 1/r")?;
                out.r = to_f64(r);
                out.s = params.value("s")?;
                out.b = to_f64(b);
            }
            EstimateKind::Embed4 => {
                let (r1, s1, b1) = (params.need("r")?, params.need("s")?, params.need("b")?);
                let (r0, s0, b0) = (params.need("r0")?, params.need("s0")?, params.need("b0")?);
                require(one < r1 && r1 <= r0, "need 1 < r1 <= r0")?;
                let gap = r1.recip() - r0.recip();
                if gap == zero {
                    require(s1 >= s0 && b1 >= b0, "need s1 >= s0 and b1 >= b0 when r1 = r0")?;
                } else {
                    require(s1 - r1.recip() > s0 - r0.recip(), "need s1 - 1/r1 > s0 - 1/r0")?;
                    require(b1 - r1.recip() > b0 - r0.recip(), "need b1 - 1/r1 > b0 - 1/r0")?;
                }
                out.r = to_f64(r1);
                out.s = to_f64(s1);
                out.b = to_f64(b1);
                out.r0 = to_f64(r0);
                out.s0 = to_f64(s0);
                out.b0 = to_f64(b0);
            }
            EstimateKind::TrilinearT2 => {
                let (r, s, b, bp) = (
                    params.need("r")?,
                    params.need("s")?,
                    params.need("b")?,
                    params.need("b_prime")?,
                );
                require(q_(4, 3) < r && r <= q_(2, 1), "r must lie in (4/3, 2] (Theorem 2: 2 >= r > 4/3)")?;
                let s_r = q_(1, 2) - r.recip() / q_(2, 1);
                require(s >= s_r, "s must satisfy s >= s(r) = 1/2 - 1/(2r) (Theorem 2)")?;
                require(b > r.recip(), "b must exceed 1/r (Theorem 2)")?;
                require(bp < r.recip() / q_(2, 1) - q_(5, 8), "b' must be below 1/(2r) - 5/8 (Theorem 2)")?;
                out.r = to_f64(r);
                out.s = to_f64(s);
                out.b = to_f64(b);
                out.b_prime = to_f64(bp);
            }
        }
        Ok(out)
    }

    /// Parameters used when a probe is requested without any.
    pub fn default_params(self) -> EstimateParams {
        let mut p = EstimateParams::default();
        let set = |p: &mut EstimateParams, k: &str, v: Q| p.set(k, v).expect("known key");
        match self {
            EstimateKind::L8Strichartz | EstimateKind::BilinearL3 => {}
            EstimateKind::Lemma4 => set(&mut p, "q", q_(6, 1)),
            EstimateKind::FsAiry => set(&mut p, "r", q_(3, 2)),
            EstimateKind::Cor3General => {
                set(&mut p, "p", q_(5, 1));
                set(&mut p, "q", q_(6, 1));
            }
            EstimateKind::Xnorm30 | EstimateKind::Xnorm31 => {
                // 1/r = 2/5 + 1/6 = 17/30
                set(&mut p, "p", q_(5, 1));
                set(&mut p, "q", q_(6, 1));
                set(&mut p, "b", q_(17, 30) + q_(1, 20));
            }
            EstimateKind::CorK1 | EstimateKind::CorK2 => {
                set(&mut p, "s", q_(1, 4));
                set(&mut p, "b", q_(11, 20));
                set(&mut p, "b_tilde", q_(1, 3) + q_(1, 20));
            }
            EstimateKind::CorK10 => {
                set(&mut p, "r", q_(3, 2));
                set(&mut p, "sigma", q_(1, 4));
                set(&mut p, "b", q_(1, 2));
                set(&mut p, "b_prime", -q_(5, 18) - q_(1, 20));
            }
            EstimateKind::Lemma2Delta => {
                set(&mut p, "r", q_(2, 1));
                set(&mut p, "s", Q::zero());
                set(&mut p, "b", q_(3, 5));
                set(&mut p, "b_prime", -q_(3, 10));
            }
            EstimateKind::Homog5 => {
                set(&mut p, "r", q_(3, 2));
                set(&mut p, "s", q_(1, 4));
                set(&mut p, "b", q_(1, 2));
            }
            EstimateKind::Embed52 => {
                set(&mut p, "r", q_(3, 2));
                set(&mut p, "s", q_(1, 6));
                set(&mut p, "b", q_(2, 3) + q_(1, 20));
            }
            EstimateKind::Embed4 => {
                set(&mut p, "r", q_(3, 2));
                set(&mut p, "s", q_(13, 60));
                set(&mut p, "b", q_(2, 3) + q_(1, 20));
                set(&mut p, "r0", q_(2, 1));
                set(&mut p, "s0", Q::zero());
                set(&mut p, "b0", q_(1, 2));
            }
            EstimateKind::TrilinearT2 => {
                set(&mut p, "r", q_(2, 1));
                set(&mut p, "s", q_(1, 4));
                set(&mut p, "b", q_(1, 2) + q_(1, 20));
                set(&mut p, "b_prime", q_(1, 4) - q_(5, 8) - q_(1, 20));
            }
        }
        p
    }
}
