//! Dormand–Prince 8(5,3) with Hairer's error estimator, on flat complex
//! state vectors. Steps are clipped so that every requested output time is
//! hit exactly, which makes dense output unnecessary.

use crate::{Error, Result, C64};

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

const SAFE: f64 = 0.9;
const FAC_MIN: f64 = 0.333;
const FAC_MAX: f64 = 6.0;

pub(crate) trait OdeSystem {
    fn rhs(&mut self, t: f64, y: &[C64], dy: &mut [C64]);

    /// Called on every accepted state before it is used again.
    fn accepted(&mut self, _t: f64, _y: &mut [C64]) {}
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct StepControl {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    pub h_max: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub(crate) struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

fn combine(out: &mut [C64], y: &[C64], h: f64, terms: &[(f64, &[C64])]) {
    out.copy_from_slice(y);
    for (a, k) in terms {
        let s = a * h;
        for (o, v) in out.iter_mut().zip(k.iter()) {
            o.re += s * v.re;
            o.im += s * v.im;
        }
    }
}

fn accumulate(out: &mut [C64], terms: &[(f64, &[C64])]) {
    out.fill(C64::new(0.0, 0.0));
    for (a, k) in terms {
        for (o, v) in out.iter_mut().zip(k.iter()) {
            o.re += a * v.re;
            o.im += a * v.im;
        }
    }
}

fn scaled_norm(v: &[C64], y: &[C64], control: &StepControl) -> f64 {
    let mut acc = 0.0;
    for (x, s) in v.iter().zip(y) {
        let sr = control.atol + control.rtol * s.re.abs();
        let si = control.atol + control.rtol * s.im.abs();
        acc += (x.re / sr).powi(2) + (x.im / si).powi(2);
    }
    (acc / (2 * v.len()).max(1) as f64).sqrt()
}

fn initial_step<S: OdeSystem>(sys: &mut S, t: f64, y: &[C64], f0: &[C64], control: &StepControl, span: f64) -> f64 {
    let dnf = scaled_norm(f0, y, control);
    let dny = scaled_norm(y, y, control);
    let mut h = if dnf <= 1e-10 || dny <= 1e-10 { 1e-6 } else { 0.01 * dny / dnf };
    h = h.min(control.h_max).min(span);
    let mut y1 = vec![C64::new(0.0, 0.0); y.len()];
    combine(&mut y1, y, h, &[(1.0, f0)]);
    let mut f1 = vec![C64::new(0.0, 0.0); y.len()];
    sys.rhs(t + h, &y1, &mut f1);
    let diff: Vec<C64> = f1.iter().zip(f0).map(|(a, b)| a - b).collect();
    let der2 = scaled_norm(&diff, y, control) / h;
    let der12 = dnf.max(der2);
    let h1 = if der12 <= 1e-15 { (h * 1e-3).max(1e-6) } else { (0.01 / der12).powf(1.0 / 8.0) };
    (100.0 * h).min(h1).min(control.h_max).min(span)
}

/// Integrates from `t0`, calling `on_output(i, t, y)` exactly at each
/// `outputs[i]`; the callback returns `false` to stop early.
pub(crate) fn integrate<S, F>(
    sys: &mut S,
    t0: f64,
    y: &mut Vec<C64>,
    outputs: &[f64],
    control: &StepControl,
    mut on_output: F,
) -> Result<StepStats>
where
    S: OdeSystem,
    F: FnMut(usize, f64, &[C64]) -> Result<bool>,
{
    let n = y.len();
    let zero = C64::new(0.0, 0.0);
    let mut k: Vec<Vec<C64>> = (0..10).map(|_| vec![zero; n]).collect();
    let mut stage = vec![zero; n];
    let mut y_new = vec![zero; n];
    let mut stats = StepStats::default();
    let mut t = t0;
    let mut next = 0;
    while next < outputs.len() && outputs[next] <= t0 {
        if !on_output(next, t0, y)? {
            return Ok(stats);
        }
        next += 1;
    }
    if next == outputs.len() {
        return Ok(stats);
    }
    let t_end = *outputs.last().unwrap();
    sys.rhs(t, y, &mut k[0]);
    stats.evaluations += 1;
    let mut h = initial_step(sys, t, y, &k[0], control, t_end - t0);
    stats.evaluations += 1;
    let mut last_rejected = false;

    while next < outputs.len() {
        if stats.accepted + stats.rejected >= control.max_steps {
            return Err(Error::StepBudget(control.max_steps));
        }
        if h < 1e-13 * t.abs().max(1.0) {
            return Err(Error::StepUnderflow { t, h });
        }
        let target = outputs[next];
        let clipped = t + h >= target - 1e-12 * target.abs().max(1.0);
        let step = if clipped { target - t } else { h };

        let (k1, rest) = k.split_first_mut().unwrap();
        let [k2, k3, k4, k5, k6, k7, k8, k9, k10] = rest else { unreachable!() };
        combine(&mut stage, y, step, &[(A21, k1)]);
        sys.rhs(t + C2 * step, &stage, k2);
        combine(&mut stage, y, step, &[(A31, k1), (A32, k2)]);
        sys.rhs(t + C3 * step, &stage, k3);
        combine(&mut stage, y, step, &[(A41, k1), (A43, k3)]);
        sys.rhs(t + C4 * step, &stage, k4);
        combine(&mut stage, y, step, &[(A51, k1), (A53, k3), (A54, k4)]);
        sys.rhs(t + C5 * step, &stage, k5);
        combine(&mut stage, y, step, &[(A61, k1), (A64, k4), (A65, k5)]);
        sys.rhs(t + C6 * step, &stage, k6);
        combine(&mut stage, y, step, &[(A71, k1), (A74, k4), (A75, k5), (A76, k6)]);
        sys.rhs(t + C7 * step, &stage, k7);
        combine(&mut stage, y, step, &[(A81, k1), (A84, k4), (A85, k5), (A86, k6), (A87, k7)]);
        sys.rhs(t + C8 * step, &stage, k8);
        combine(&mut stage, y, step, &[(A91, k1), (A94, k4), (A95, k5), (A96, k6), (A97, k7), (A98, k8)]);
        sys.rhs(t + C9 * step, &stage, k9);
        combine(
            &mut stage,
            y,
            step,
            &[(A101, k1), (A104, k4), (A105, k5), (A106, k6), (A107, k7), (A108, k8), (A109, k9)],
        );
        sys.rhs(t + C10 * step, &stage, k10);
        combine(
            &mut stage,
            y,
            step,
            &[(A111, k1), (A114, k4), (A115, k5), (A116, k6), (A117, k7), (A118, k8), (A119, k9), (A1110, k10)],
        );
        // k2 and k3 are free from here on: k2 holds stage 11, k3 stage 12.
        sys.rhs(t + C11 * step, &stage, k2);
        let t_new = t + step;
        combine(
            &mut stage,
            y,
            step,
            &[
                (A121, k1),
                (A124, k4),
                (A125, k5),
                (A126, k6),
                (A127, k7),
                (A128, k8),
                (A129, k9),
                (A1210, k10),
                (A1211, k2),
            ],
        );
        sys.rhs(t_new, &stage, k3);
        stats.evaluations += 11;

        // Stages 4 and 5 are no longer needed: k4 takes the 8th-order slope, k5 the 5th-order error.
        accumulate(k4, &[(B1, k1), (B6, k6), (B7, k7), (B8, k8), (B9, k9), (B10, k10), (B11, k2), (B12, k3)]);
        accumulate(k5, &[(ER1, k1), (ER6, k6), (ER7, k7), (ER8, k8), (ER9, k9), (ER10, k10), (ER11, k2), (ER12, k3)]);
        let mut err = 0.0;
        let mut err2 = 0.0;
        for i in 0..n {
            y_new[i] = y[i] + k4[i] * step;
            let e3 = k4[i] - k1[i] * BHH1 - k9[i] * BHH2 - k3[i] * BHH3;
            let e5 = k5[i];
            let sr = control.atol + control.rtol * y[i].re.abs().max(y_new[i].re.abs());
            let si = control.atol + control.rtol * y[i].im.abs().max(y_new[i].im.abs());
            err += (e5.re / sr).powi(2) + (e5.im / si).powi(2);
            err2 += (e3.re / sr).powi(2) + (e3.im / si).powi(2);
        }
        let mut deno = err + 0.01 * err2;
        if deno <= 0.0 {
            deno = 1.0;
        }
        let err = step.abs() * err * (1.0 / (deno * (2 * n) as f64)).sqrt();
        if !err.is_finite() {
            return Err(Error::Numerical(format!("non-finite error estimate at t = {t}")));
        }

        let fac11 = err.powf(1.0 / 8.0);
        let fac = (1.0 / FAC_MAX).max((1.0 / FAC_MIN).min(fac11 / SAFE));
        let mut h_new = step / fac;
        if err <= 1.0 {
            stats.accepted += 1;
            std::mem::swap(y, &mut y_new);
            t = if clipped { target } else { t_new };
            sys.accepted(t, y);
            sys.rhs(t, y, k1);
            stats.evaluations += 1;
            if last_rejected {
                h_new = h_new.min(step);
                last_rejected = false;
            }
            if clipped {
                h_new = h_new.max(h);
                if !on_output(next, t, y)? {
                    return Ok(stats);
                }
                next += 1;
            }
        } else {
            h_new = step / (1.0 / FAC_MIN).min(fac11 / SAFE);
            last_rejected = true;
            stats.rejected += 1;
        }
        h = h_new.min(control.h_max);
    }
    Ok(stats)
}
