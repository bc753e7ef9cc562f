//! Explicit Runge-Kutta 8(5,3) of Dormand and Prince with Hairer's step-size
//! control, specialised to small fixed-size systems.

// Tableau coefficients are kept at their published precision.
#![allow(clippy::excessive_precision)]

use nalgebra::SVector;

use crate::error::{Error, Result};

/// Adaptive DOP853 integrator settings.
#[derive(Debug, Clone, Copy)]
pub struct Dop853 {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for Dop853 {
    fn default() -> Self {
        Self {
            rtol: 1e-12,
            atol: 1e-14,
            max_steps: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Stats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

const SAFE: f64 = 0.9;
const FAC1: f64 = 0.333;
const FAC2: f64 = 6.0;
const BETA: f64 = 0.0;

impl Dop853 {
    pub fn with_tolerances(rtol: f64, atol: f64) -> Self {
        Self {
            rtol,
            atol,
            ..Self::default()
        }
    }

    /// Integrates `y' = f(t, y)` from `t0` to `t_end` (`t_end >= t0`).
    pub fn integrate<const N: usize, F>(
        &self,
        f: F,
        t0: f64,
        y0: SVector<f64, N>,
        t_end: f64,
    ) -> Result<SVector<f64, N>>
    where
        F: FnMut(f64, &SVector<f64, N>) -> SVector<f64, N>,
    {
        self.integrate_with_stats(f, t0, y0, t_end).map(|(y, _)| y)
    }

    pub fn integrate_with_stats<const N: usize, F>(
        &self,
        mut f: F,
        t0: f64,
        y0: SVector<f64, N>,
        t_end: f64,
    ) -> Result<(SVector<f64, N>, Stats)>
    where
        F: FnMut(f64, &SVector<f64, N>) -> SVector<f64, N>,
    {
        let mut stats = Stats::default();
        let span = t_end - t0;
        if !(span >= 0.0) || !span.is_finite() {
            return Err(Error::IntegrationFailure {
                t: t0,
                reason: "invalid integration interval",
            });
        }
        if span == 0.0 {
            return Ok((y0, stats));
        }

        let mut t = t0;
        let mut y = y0;
        let mut k1 = f(t, &y);
        stats.evaluations += 1;
        let mut h = self.initial_step(&mut f, t, &y, &k1, span, &mut stats);
        let mut facold: f64 = 1e-4;
        let mut last_rejected = false;
        let expo1 = 1.0 / 8.0 - BETA * 0.2;

        loop {
            if stats.accepted + stats.rejected >= self.max_steps {
                return Err(Error::IntegrationFailure {
                    t,
                    reason: "step limit exceeded",
                });
            }
            let last = t + h * 1.01 >= t_end;
            if last {
                h = t_end - t;
            }
            if h.abs() <= f64::EPSILON * t.abs().max(1.0) {
                return Err(Error::IntegrationFailure {
                    t,
                    reason: "step size underflow",
                });
            }

            let step = stages(&mut f, t, &y, &k1, h);
            stats.evaluations += 11;

            let mut err = 0.0;
            let mut err2 = 0.0;
            for i in 0..N {
                let sk = self.atol + self.rtol * y[i].abs().max(step.y_new[i].abs());
                let e2 = step.k4[i] - BHH1 * k1[i] - BHH2 * step.k9[i] - BHH3 * step.k3[i];
                err2 += (e2 / sk).powi(2);
                let e = ER1 * k1[i]
                    + ER6 * step.k6[i]
                    + ER7 * step.k7[i]
                    + ER8 * step.k8[i]
                    + ER9 * step.k9[i]
                    + ER10 * step.k10[i]
                    + ER11 * step.k2[i]
                    + ER12 * step.k3[i];
                err += (e / sk).powi(2);
            }
            let mut deno = err + 0.01 * err2;
            if deno <= 0.0 {
                deno = 1.0;
            }
            let err = h.abs() * err * (1.0 / (deno * N as f64)).sqrt();
            if !err.is_finite() {
                return Err(Error::IntegrationFailure {
                    t,
                    reason: "non-finite error estimate",
                });
            }

            let fac11 = err.powf(expo1);
            let fac = fac11 / facold.powf(BETA);
            let fac = (1.0 / FAC2).max((1.0 / FAC1).min(fac / SAFE));
            let mut h_new = h / fac;

            if err <= 1.0 {
                facold = err.max(1e-4);
                stats.accepted += 1;
                t = if last { t_end } else { t + h };
                y = step.y_new;
                if last {
                    return Ok((y, stats));
                }
                k1 = f(t, &y);
                stats.evaluations += 1;
                if last_rejected {
                    h_new = h_new.min(h);
                }
                last_rejected = false;
            } else {
                h_new = h / (1.0 / FAC1).min(fac11 / SAFE);
                stats.rejected += 1;
                last_rejected = true;
            }
            h = h_new;
        }
    }

    fn initial_step<const N: usize, F>(
        &self,
        f: &mut F,
        t: f64,
        y: &SVector<f64, N>,
        f0: &SVector<f64, N>,
        span: f64,
        stats: &mut Stats,
    ) -> f64
    where
        F: FnMut(f64, &SVector<f64, N>) -> SVector<f64, N>,
    {
        let scale = |i: usize| self.atol + self.rtol * y[i].abs();
        let dnf: f64 = (0..N).map(|i| (f0[i] / scale(i)).powi(2)).sum();
        let dny: f64 = (0..N).map(|i| (y[i] / scale(i)).powi(2)).sum();
        let mut h = if dnf <= 1e-10 || dny <= 1e-10 {
            1e-6
        } else {
            (dny / dnf).sqrt() * 0.01
        };
        h = h.min(span);
        let y1 = y + f0 * h;
        let f1 = f(t + h, &y1);
        stats.evaluations += 1;
        let der2: f64 = (0..N)
            .map(|i| ((f1[i] - f0[i]) / scale(i)).powi(2))
            .sum::<f64>()
            .sqrt()
            / h;
        let der12 = der2.max(dnf.sqrt());
        let h1 = if der12 <= 1e-15 {
            (h * 1e-3).max(1e-6)
        } else {
            (0.01 / der12).powf(1.0 / 8.0)
        };
        (100.0 * h).min(h1).min(span)
    }
}

struct StepResult<const N: usize> {
    y_new: SVector<f64, N>,
    k2: SVector<f64, N>,
    k3: SVector<f64, N>,
    k4: SVector<f64, N>,
    k6: SVector<f64, N>,
    k7: SVector<f64, N>,
    k8: SVector<f64, N>,
    k9: SVector<f64, N>,
    k10: SVector<f64, N>,
}

fn stages<const N: usize, F>(
    f: &mut F,
    t: f64,
    y: &SVector<f64, N>,
    k1: &SVector<f64, N>,
    h: f64,
) -> StepResult<N>
where
    F: FnMut(f64, &SVector<f64, N>) -> SVector<f64, N>,
{
    let k2 = f(t + C2 * h, &(y + k1 * (A21 * h)));
    let k3 = f(t + C3 * h, &(y + (k1 * A31 + k2 * A32) * h));
    let k4 = f(t + C4 * h, &(y + (k1 * A41 + k3 * A43) * h));
    let k5 = f(t + C5 * h, &(y + (k1 * A51 + k3 * A53 + k4 * A54) * h));
    let k6 = f(t + C6 * h, &(y + (k1 * A61 + k4 * A64 + k5 * A65) * h));
    let k7 = f(
        t + C7 * h,
        &(y + (k1 * A71 + k4 * A74 + k5 * A75 + k6 * A76) * h),
    );
    let k8 = f(
        t + C8 * h,
        &(y + (k1 * A81 + k4 * A84 + k5 * A85 + k6 * A86 + k7 * A87) * h),
    );
    let k9 = f(
        t + C9 * h,
        &(y + (k1 * A91 + k4 * A94 + k5 * A95 + k6 * A96 + k7 * A97 + k8 * A98) * h),
    );
    let k10 = f(
        t + C10 * h,
        &(y + (k1 * A101 + k4 * A104 + k5 * A105 + k6 * A106 + k7 * A107 + k8 * A108 + k9 * A109)
            * h),
    );
    let k11 = f(
        t + C11 * h,
        &(y + (k1 * A111
            + k4 * A114
            + k5 * A115
            + k6 * A116
            + k7 * A117
            + k8 * A118
            + k9 * A119
            + k10 * A1110)
            * h),
    );
    let y12 = y
        + (k1 * A121
            + k4 * A124
            + k5 * A125
            + k6 * A126
            + k7 * A127
            + k8 * A128
            + k9 * A129
            + k10 * A1210
            + k11 * A1211)
            * h;
    let k12 = f(t + h, &y12);
    let incr = k1 * B1 + k6 * B6 + k7 * B7 + k8 * B8 + k9 * B9 + k10 * B10 + k11 * B11 + k12 * B12;
    StepResult {
        y_new: y + incr * h,
        // the error estimator reads the 11th and 12th stages under these names
        k2: k11,
        k3: k12,
        k4: incr,
        k6,
        k7,
        k8,
        k9,
        k10,
    }
}

const C2: f64 = 0.526001519587677318785587544488E-01;
const C3: f64 = 0.789002279381515978178381316732E-01;
const C4: f64 = 0.118350341907227396726757197510E+00;
const C5: f64 = 0.281649658092772603273242802490E+00;
const C6: f64 = 0.333333333333333333333333333333E+00;
const C7: f64 = 0.25E+00;
const C8: f64 = 0.307692307692307692307692307692E+00;
const C9: f64 = 0.651282051282051282051282051282E+00;
const C10: f64 = 0.6E+00;
const C11: f64 = 0.857142857142857142857142857142E+00;

const A21: f64 = 5.26001519587677318785587544488E-2;
const A31: f64 = 1.97250569845378994544595329183E-2;
const A32: f64 = 5.91751709536136983633785987549E-2;
const A41: f64 = 2.95875854768068491816892993775E-2;
const A43: f64 = 8.87627564304205475450678981324E-2;
const A51: f64 = 2.41365134159266685502369798665E-1;
const A53: f64 = -8.84549479328286085344864962717E-1;
const A54: f64 = 9.24834003261792003115737966543E-1;
const A61: f64 = 3.7037037037037037037037037037E-2;
const A64: f64 = 1.70828608729473871279604482173E-1;
const A65: f64 = 1.25467687566822425016691814123E-1;
const A71: f64 = 3.7109375E-2;
const A74: f64 = 1.70252211019544039314978060272E-1;
const A75: f64 = 6.02165389804559606850219397283E-2;
const A76: f64 = -1.7578125E-2;
const A81: f64 = 3.70920001185047927108779319836E-2;
const A84: f64 = 1.70383925712239993810214054705E-1;
const A85: f64 = 1.07262030446373284651809199168E-1;
const A86: f64 = -1.53194377486244017527936158236E-2;
const A87: f64 = 8.27378916381402288758473766002E-3;
const A91: f64 = 6.24110958716075717114429577812E-1;
const A94: f64 = -3.36089262944694129406857109825E0;
const A95: f64 = -8.68219346841726006818189891453E-1;
const A96: f64 = 2.75920996994467083049415600797E1;
const A97: f64 = 2.01540675504778934086186788979E1;
const A98: f64 = -4.34898841810699588477366255144E1;
const A101: f64 = 4.77662536438264365890433908527E-1;
const A104: f64 = -2.48811461997166764192642586468E0;
const A105: f64 = -5.90290826836842996371446475743E-1;
const A106: f64 = 2.12300514481811942347288949897E1;
const A107: f64 = 1.52792336328824235832596922938E1;
const A108: f64 = -3.32882109689848629194453265587E1;
const A109: f64 = -2.03312017085086261358222928593E-2;
const A111: f64 = -9.3714243008598732571704021658E-1;
const A114: f64 = 5.18637242884406370830023853209E0;
const A115: f64 = 1.09143734899672957818500254654E0;
const A116: f64 = -8.14978701074692612513997267357E0;
const A117: f64 = -1.85200656599969598641566180701E1;
const A118: f64 = 2.27394870993505042818970056734E1;
const A119: f64 = 2.49360555267965238987089396762E0;
const A1110: f64 = -3.0467644718982195003823669022E0;
const A121: f64 = 2.27331014751653820792359768449E0;
const A124: f64 = -1.05344954667372501984066689879E1;
const A125: f64 = -2.00087205822486249909675718444E0;
const A126: f64 = -1.79589318631187989172765950534E1;
const A127: f64 = 2.79488845294199600508499808837E1;
const A128: f64 = -2.85899827713502369474065508674E0;
const A129: f64 = -8.87285693353062954433549289258E0;
const A1210: f64 = 1.23605671757943030647266201528E1;
const A1211: f64 = 6.43392746015763530355970484046E-1;

const B1: f64 = 5.42937341165687622380535766363E-2;
const B6: f64 = 4.45031289275240888144113950566E0;
const B7: f64 = 1.89151789931450038304281599044E0;
const B8: f64 = -5.8012039600105847814672114227E0;
const B9: f64 = 3.1116436695781989440891606237E-1;
const B10: f64 = -1.52160949662516078556178806805E-1;
const B11: f64 = 2.01365400804030348374776537501E-1;
const B12: f64 = 4.47106157277725905176885569043E-2;

const BHH1: f64 = 0.244094488188976377952755905512E+00;
const BHH2: f64 = 0.733846688281611857341361741547E+00;
const BHH3: f64 = 0.220588235294117647058823529412E-01;

const ER1: f64 = 0.1312004499419488073250102996E-01;
const ER6: f64 = -0.1225156446376204440720569753E+01;
const ER7: f64 = -0.4957589496572501915214079952E+00;
const ER8: f64 = 0.1664377182454986536961530415E+01;
const ER9: f64 = -0.3503288487499736816886487290E+00;
const ER10: f64 = 0.3341791187130174790297318841E+00;
const ER11: f64 = 0.8192320648511571246570742613E-01;
const ER12: f64 = -0.2235530786388629525884427845E-01;
