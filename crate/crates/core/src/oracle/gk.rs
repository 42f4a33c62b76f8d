//! Globally adaptive 21-point Gauss-Kronrod quadrature for vector integrands.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_208_633_198_897,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

/// Weights of the embedded 10-point Gauss rule, at `XGK[1], XGK[3], ..`.
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

pub const POINTS_PER_PANEL: usize = 21;

/// Variable change applied on a panel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Map {
    /// `x = t`
    Identity,
    /// `x = sign * scale / t`, `t` in `(0, 1]`.
    Tail { scale: f64, sign: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Panel {
    pub a: f64,
    pub b: f64,
    pub map: Map,
}

impl Panel {
    pub fn linear(a: f64, b: f64) -> Self {
        Self {
            a,
            b,
            map: Map::Identity,
        }
    }

    /// `[scale, inf)` for `sign = 1`, `(-inf, -scale]` for `sign = -1`.
    pub fn tail(scale: f64, sign: f64) -> Self {
        Self {
            a: 0.0,
            b: 1.0,
            map: Map::Tail { scale, sign },
        }
    }

    fn split(&self) -> (Self, Self) {
        let m = 0.5 * (self.a + self.b);
        (Self { b: m, ..*self }, Self { a: m, ..*self })
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Estimate<const N: usize> {
    pub value: [f64; N],
    pub error: [f64; N],
}

/// One Kronrod panel. Returns `None` if the integrand produced a non-finite value.
pub fn kronrod<const N: usize, F: Fn(f64) -> [f64; N]>(f: &F, panel: &Panel) -> Option<Estimate<N>> {
    let c = 0.5 * (panel.a + panel.b);
    let h = 0.5 * (panel.b - panel.a);
    let eval = |t: f64| -> [f64; N] {
        match panel.map {
            Map::Identity => f(t),
            Map::Tail { scale, sign } => {
                let jac = scale / (t * t);
                let mut v = f(sign * scale / t);
                for x in v.iter_mut() {
                    *x *= jac;
                }
                v
            }
        }
    };
    let mut k = [0.0; N];
    let mut g = [0.0; N];
    let centre = eval(c);
    for i in 0..N {
        k[i] = WGK[10] * centre[i];
    }
    for j in 0..10 {
        let dx = h * XGK[j];
        let lo = eval(c - dx);
        let hi = eval(c + dx);
        for i in 0..N {
            let s = lo[i] + hi[i];
            k[i] += WGK[j] * s;
            if j % 2 == 1 {
                g[i] += WG[j / 2] * s;
            }
        }
    }
    let mut est = Estimate {
        value: [0.0; N],
        error: [0.0; N],
    };
    for i in 0..N {
        est.value[i] = k[i] * h;
        est.error[i] = ((k[i] - g[i]) * h).abs();
        if !est.value[i].is_finite() || !est.error[i].is_finite() {
            return None;
        }
    }
    Some(est)
}

#[derive(Debug, Clone, Copy)]
pub struct Outcome<const N: usize> {
    pub value: [f64; N],
    pub error: [f64; N],
    pub n_evals: usize,
    pub converged: bool,
    /// True if the integrand returned a non-finite value.
    pub poisoned: bool,
}

struct Entry<const N: usize> {
    key: f64,
    panel: Panel,
    est: Estimate<N>,
}

impl<const N: usize> PartialEq for Entry<N> {
    fn eq(&self, other: &Self) -> bool {
        self.key == other.key
    }
}
impl<const N: usize> Eq for Entry<N> {}
impl<const N: usize> PartialOrd for Entry<N> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<const N: usize> Ord for Entry<N> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key.total_cmp(&other.key)
    }
}

fn key<const N: usize>(est: &Estimate<N>, totals: &[f64; N]) -> f64 {
    (0..N)
        .map(|i| est.error[i] / totals[i].abs().max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max)
}

/// Integrates `f` over the union of `panels` until every component meets
/// `sum(err) <= tol |sum(value)|` or `max_evals` is exhausted.
pub fn integrate<const N: usize, F: Fn(f64) -> [f64; N]>(
    f: &F,
    panels: &[Panel],
    tol: f64,
    max_evals: usize,
) -> Outcome<N> {
    let mut n_evals = 0;
    let mut value = [0.0; N];
    let mut error = [0.0; N];
    let mut heap: BinaryHeap<Entry<N>> = BinaryHeap::new();
    let mut frozen = Vec::new();
    let poisoned = |value, error, n_evals| Outcome {
        value,
        error,
        n_evals,
        converged: false,
        poisoned: true,
    };

    let mut first = Vec::with_capacity(panels.len());
    for p in panels {
        let Some(est) = kronrod(f, p) else {
            return poisoned(value, error, n_evals);
        };
        n_evals += POINTS_PER_PANEL;
        for i in 0..N {
            value[i] += est.value[i];
            error[i] += est.error[i];
        }
        first.push((*p, est));
    }
    for (panel, est) in first {
        heap.push(Entry {
            key: key(&est, &value),
            panel,
            est,
        });
    }

    let done = |value: &[f64; N], error: &[f64; N]| (0..N).all(|i| error[i] <= tol * value[i].abs());
    let mut steps = 0usize;
    loop {
        if done(&value, &error) {
            break;
        }
        if n_evals + 2 * POINTS_PER_PANEL > max_evals {
            break;
        }
        let Some(top) = heap.pop() else { break };
        let (l, r) = top.panel.split();
        let width_ok = {
            let m = 0.5 * (l.a + r.b);
            (r.b - l.a).abs() > 64.0 * f64::EPSILON * m.abs().max(f64::MIN_POSITIVE)
        };
        if !width_ok {
            frozen.push(top);
            continue;
        }
        let (Some(el), Some(er)) = (kronrod(f, &l), kronrod(f, &r)) else {
            return poisoned(value, error, n_evals);
        };
        n_evals += 2 * POINTS_PER_PANEL;
        for i in 0..N {
            value[i] += el.value[i] + er.value[i] - top.est.value[i];
            error[i] += el.error[i] + er.error[i] - top.est.error[i];
        }
        heap.push(Entry {
            key: key(&el, &value),
            panel: l,
            est: el,
        });
        heap.push(Entry {
            key: key(&er, &value),
            panel: r,
            est: er,
        });
        steps += 1;
        if steps.is_multiple_of(256) {
            // re-sum to shed accumulated cancellation and refresh the keys
            let mut v = [0.0; N];
            let mut e = [0.0; N];
            let all: Vec<Entry<N>> = heap.drain().collect();
            for ent in all.iter().chain(frozen.iter()) {
                for i in 0..N {
                    v[i] += ent.est.value[i];
                    e[i] += ent.est.error[i];
                }
            }
            value = v;
            error = e;
            heap = all
                .into_iter()
                .map(|mut ent| {
                    ent.key = key(&ent.est, &value);
                    ent
                })
                .collect();
        }
    }
    let mut v = [0.0; N];
    let mut e = [0.0; N];
    for ent in heap.iter().chain(frozen.iter()) {
        for i in 0..N {
            v[i] += ent.est.value[i];
            e[i] += ent.est.error[i];
        }
    }
    Outcome {
        value: v,
        error: e,
        n_evals,
        converged: done(&v, &e),
        poisoned: false,
    }
}
