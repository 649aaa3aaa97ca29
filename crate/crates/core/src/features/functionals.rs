//! Statistical functionals that summarize an LLD contour into one number.

use serde::{Deserialize, Serialize};

/// A contour: the values a functional sees, split into contiguous segments
/// (voiced runs for pitch-type channels, one segment otherwise). Slopes and
/// deltas are never taken across a segment boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct Contour {
    pub values: Vec<f64>,
    /// Start index of each segment; the first is always 0 when non-empty.
    pub segment_starts: Vec<usize>,
    /// Seconds per frame.
    pub dt: f64,
}

impl Contour {
    pub fn single(values: Vec<f64>, dt: f64) -> Self {
        let segment_starts = if values.is_empty() { vec![] } else { vec![0] };
        Self { values, segment_starts, dt }
    }

    /// Keeps frames where `mask` is set; each run of kept frames is a segment.
    pub fn masked(all: &[f64], mask: &[bool], dt: f64) -> Self {
        let mut values = Vec::new();
        let mut segment_starts = Vec::new();
        let mut prev = false;
        for (&v, &m) in all.iter().zip(mask) {
            if m {
                if !prev {
                    segment_starts.push(values.len());
                }
                values.push(v);
            }
            prev = m;
        }
        Self { values, segment_starts, dt }
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn segments(&self) -> impl Iterator<Item = &[f64]> {
        let n = self.values.len();
        self.segment_starts.iter().enumerate().map(move |(i, &s)| {
            let e = self.segment_starts.get(i + 1).copied().unwrap_or(n);
            &self.values[s..e]
        })
    }

    /// Within-segment steps `x[t] - x[t-1]`.
    fn steps(&self) -> Vec<f64> {
        self.segments().flat_map(|s| s.windows(2).map(|w| w[1] - w[0])).collect()
    }

    /// First-difference contour with the same segmentation; the first value
    /// of every segment is 0.
    pub fn delta(&self) -> Contour {
        let mut values = Vec::with_capacity(self.values.len());
        for seg in self.segments() {
            values.push(0.0);
            values.extend(seg.windows(2).map(|w| w[1] - w[0]));
        }
        Contour { values, segment_starts: self.segment_starts.clone(), dt: self.dt }
    }
}

macro_rules! functionals {
    ($($variant:ident => $name:literal),* $(,)?) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
        pub enum Functional { $($variant),* }

        impl Functional {
            pub const ALL: &'static [Functional] = &[$(Functional::$variant),*];

            pub fn name(self) -> &'static str {
                match self { $(Functional::$variant => $name),* }
            }

            pub fn from_name(s: &str) -> Option<Self> {
                match s { $($name => Some(Functional::$variant),)* _ => None }
            }
        }
    };
}

functionals! {
    Mean => "mean",
    Stddev => "stddev",
    Skewness => "skewness",
    Kurtosis => "kurtosis",
    Rms => "rms",
    Min => "min",
    Max => "max",
    Range => "range",
    MinPos => "min_pos",
    MaxPos => "max_pos",
    Percentile1 => "percentile1",
    Percentile5 => "percentile5",
    Percentile10 => "percentile10",
    Percentile20 => "percentile20",
    Percentile25 => "percentile25",
    Percentile50 => "percentile50",
    Percentile75 => "percentile75",
    Percentile80 => "percentile80",
    Percentile90 => "percentile90",
    Percentile95 => "percentile95",
    Percentile99 => "percentile99",
    Range20_80 => "range20_80",
    Iqr25_75 => "iqr25_75",
    Range1_99 => "range1_99",
    LinearSlope => "linear_slope",
    LinearOffset => "linear_offset",
    LinearError => "linear_error",
    QuadCurvature => "quad_curvature",
    MeanRisingSlope => "mean_rising_slope",
    StddevRisingSlope => "stddev_rising_slope",
    MeanFallingSlope => "mean_falling_slope",
    StddevFallingSlope => "stddev_falling_slope",
    UpLevelTime25 => "up_level_time25",
    UpLevelTime50 => "up_level_time50",
    UpLevelTime75 => "up_level_time75",
    UpLevelTime90 => "up_level_time90",
    RiseTime => "rise_time",
    FallTime => "fall_time",
    PeakRate => "peak_rate",
    PeakMean => "peak_mean",
    MeanAbsDelta => "mean_abs_delta",
}

/// An ordered, duplicate-free list of functionals.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalBank(Vec<Functional>);

impl FunctionalBank {
    pub fn new(list: Vec<Functional>) -> Option<Self> {
        if list.is_empty() {
            return None;
        }
        for (i, f) in list.iter().enumerate() {
            if list[..i].contains(f) {
                return None;
            }
        }
        Some(Self(list))
    }

    /// Every functional, in declaration order.
    pub fn full() -> Self {
        Self(Functional::ALL.to_vec())
    }

    pub fn functionals(&self) -> &[Functional] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// All functionals of the bank over one contour; zeros when empty.
    pub fn apply(&self, c: &Contour) -> Vec<f64> {
        if c.is_empty() {
            return vec![0.0; self.0.len()];
        }
        let stats = Stats::new(c);
        self.0.iter().map(|&f| stats.get(f)).collect()
    }
}

fn mean(x: &[f64]) -> f64 {
    if x.is_empty() {
        0.0
    } else {
        x.iter().sum::<f64>() / x.len() as f64
    }
}

fn pop_std(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    let m = mean(x);
    (x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / x.len() as f64).sqrt()
}

/// Linear-interpolated percentile of sorted data, `p` in [0, 100].
pub fn percentile(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    let pos = p / 100.0 * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

struct Stats<'a> {
    c: &'a Contour,
    sorted: Vec<f64>,
    mean: f64,
    std: f64,
}

impl<'a> Stats<'a> {
    fn new(c: &'a Contour) -> Self {
        let mut sorted = c.values.clone();
        sorted.sort_by(f64::total_cmp);
        Self { c, sorted, mean: mean(&c.values), std: pop_std(&c.values) }
    }

    fn pct(&self, p: f64) -> f64 {
        percentile(&self.sorted, p)
    }

    fn central_moment(&self, k: i32) -> f64 {
        mean(&self.c.values.iter().map(|v| (v - self.mean).powi(k)).collect::<Vec<_>>())
    }

    /// Least-squares line over time in seconds, `(slope, offset, rms error)`.
    fn linear(&self) -> (f64, f64, f64) {
        let x = &self.c.values;
        let n = x.len();
        if n < 2 {
            return (0.0, x[0], 0.0);
        }
        let t: Vec<f64> = (0..n).map(|i| i as f64 * self.c.dt).collect();
        let mt = mean(&t);
        let stt: f64 = t.iter().map(|v| (v - mt) * (v - mt)).sum();
        let sty: f64 = t.iter().zip(x).map(|(a, b)| (a - mt) * (b - self.mean)).sum();
        let slope = if stt > 0.0 { sty / stt } else { 0.0 };
        let offset = self.mean - slope * mt;
        let err = (t.iter().zip(x).map(|(a, b)| (b - offset - slope * a).powi(2)).sum::<f64>() / n as f64).sqrt();
        (slope, offset, err)
    }

    /// Second-order coefficient of a least-squares parabola over time.
    fn curvature(&self) -> f64 {
        let x = &self.c.values;
        let n = x.len();
        if n < 3 {
            return 0.0;
        }
        // centred, unit-scaled time for conditioning
        let half = (n - 1) as f64 / 2.0;
        let u: Vec<f64> = (0..n).map(|i| (i as f64 - half) / half.max(1.0)).collect();
        let s = |p: i32| u.iter().map(|v| v.powi(p)).sum::<f64>();
        let sy = |p: i32| u.iter().zip(x).map(|(a, b)| a.powi(p) * b).sum::<f64>();
        let m = [[s(4), s(3), s(2)], [s(3), s(2), s(1)], [s(2), s(1), n as f64]];
        let rhs = [sy(2), sy(1), sy(0)];
        let det3 = |m: [[f64; 3]; 3]| {
            m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
        };
        let d = det3(m);
        if d.abs() < 1e-12 {
            return 0.0;
        }
        let mut ma = m;
        for r in 0..3 {
            ma[r][0] = rhs[r];
        }
        let a_u = det3(ma) / d;
        let scale = half.max(1.0) * self.c.dt;
        a_u / (scale * scale)
    }

    fn up_level_time(&self, q: f64) -> f64 {
        let (lo, hi) = (self.sorted[0], *self.sorted.last().unwrap());
        if hi <= lo {
            return 0.0;
        }
        let level = lo + q * (hi - lo);
        self.c.values.iter().filter(|&&v| v > level).count() as f64 / self.c.values.len() as f64
    }

    fn get(&self, f: Functional) -> f64 {
        use Functional::*;
        let x = &self.c.values;
        let n = x.len() as f64;
        let (min, max) = (self.sorted[0], *self.sorted.last().unwrap());
        let dt = self.c.dt;
        let rel_pos = |i: usize| if x.len() > 1 { i as f64 / (x.len() - 1) as f64 } else { 0.0 };
        match f {
            Mean => self.mean,
            Stddev => self.std,
            Skewness => {
                if self.std > 0.0 {
                    self.central_moment(3) / self.std.powi(3)
                } else {
                    0.0
                }
            }
            Kurtosis => {
                if self.std > 0.0 {
                    self.central_moment(4) / self.std.powi(4) - 3.0
                } else {
                    0.0
                }
            }
            Rms => (x.iter().map(|v| v * v).sum::<f64>() / n).sqrt(),
            Min => min,
            Max => max,
            Range => max - min,
            MinPos => rel_pos(x.iter().enumerate().fold(0, |b, (i, v)| if *v < x[b] { i } else { b })),
            MaxPos => rel_pos(x.iter().enumerate().fold(0, |b, (i, v)| if *v > x[b] { i } else { b })),
            Percentile1 => self.pct(1.0),
            Percentile5 => self.pct(5.0),
            Percentile10 => self.pct(10.0),
            Percentile20 => self.pct(20.0),
            Percentile25 => self.pct(25.0),
            Percentile50 => self.pct(50.0),
            Percentile75 => self.pct(75.0),
            Percentile80 => self.pct(80.0),
            Percentile90 => self.pct(90.0),
            Percentile95 => self.pct(95.0),
            Percentile99 => self.pct(99.0),
            Range20_80 => self.pct(80.0) - self.pct(20.0),
            Iqr25_75 => self.pct(75.0) - self.pct(25.0),
            Range1_99 => self.pct(99.0) - self.pct(1.0),
            LinearSlope => self.linear().0,
            LinearOffset => self.linear().1,
            LinearError => self.linear().2,
            QuadCurvature => self.curvature(),
            MeanRisingSlope | StddevRisingSlope | MeanFallingSlope | StddevFallingSlope => {
                let steps = self.c.steps();
                let rising: Vec<f64> = steps.iter().filter(|&&d| d > 0.0).map(|d| d / dt).collect();
                let falling: Vec<f64> = steps.iter().filter(|&&d| d < 0.0).map(|d| -d / dt).collect();
                match f {
                    MeanRisingSlope => mean(&rising),
                    StddevRisingSlope => pop_std(&rising),
                    MeanFallingSlope => mean(&falling),
                    _ => pop_std(&falling),
                }
            }
            UpLevelTime25 => self.up_level_time(0.25),
            UpLevelTime50 => self.up_level_time(0.5),
            UpLevelTime75 => self.up_level_time(0.75),
            UpLevelTime90 => self.up_level_time(0.9),
            RiseTime => self.c.steps().iter().filter(|&&d| d > 0.0).count() as f64 / n,
            FallTime => self.c.steps().iter().filter(|&&d| d < 0.0).count() as f64 / n,
            PeakRate | PeakMean => {
                let peaks: Vec<f64> = self
                    .c
                    .segments()
                    .flat_map(|s| s.windows(3).filter(|w| w[1] > w[0] && w[1] >= w[2]).map(|w| w[1]))
                    .collect();
                if f == PeakRate {
                    peaks.len() as f64 / (n * dt)
                } else {
                    mean(&peaks)
                }
            }
            MeanAbsDelta => {
                let steps = self.c.steps();
                mean(&steps.iter().map(|d| d.abs()).collect::<Vec<_>>())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn val(bank: &FunctionalBank, c: &Contour, f: Functional) -> f64 {
        let i = bank.functionals().iter().position(|&g| g == f).unwrap();
        bank.apply(c)[i]
    }

    #[test]
    fn names_round_trip_and_unique() {
        for &f in Functional::ALL {
            assert_eq!(Functional::from_name(f.name()), Some(f));
        }
        assert!(FunctionalBank::new(Functional::ALL.to_vec()).is_some());
        assert!(FunctionalBank::new(vec![Functional::Mean, Functional::Mean]).is_none());
        assert!(FunctionalBank::new(vec![]).is_none());
    }

    #[test]
    fn constant_contour() {
        let bank = FunctionalBank::full();
        let c = Contour::single(vec![3.5; 50], 0.01);
        let out = bank.apply(&c);
        assert_eq!(out.len(), bank.len());
        assert_eq!(val(&bank, &c, Functional::Mean), 3.5);
        assert_eq!(val(&bank, &c, Functional::Stddev), 0.0);
        assert_eq!(val(&bank, &c, Functional::Range20_80), 0.0);
        assert!(out.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn ramp_slope() {
        // a * t with t in seconds
        let a = 37.25;
        let dt = 0.01;
        let c = Contour::single((0..120).map(|i| a * i as f64 * dt).collect(), dt);
        let bank = FunctionalBank::full();
        assert!((val(&bank, &c, Functional::LinearSlope) - a).abs() < 1e-6);
        assert!(val(&bank, &c, Functional::LinearOffset).abs() < 1e-9);
        assert!(val(&bank, &c, Functional::LinearError).abs() < 1e-9);
        assert!((val(&bank, &c, Functional::MeanRisingSlope) - a).abs() < 1e-6);
        assert_eq!(val(&bank, &c, Functional::MeanFallingSlope), 0.0);
        assert!(val(&bank, &c, Functional::QuadCurvature).abs() < 1e-6);
    }

    #[test]
    fn parabola_curvature() {
        let dt = 0.01;
        let c = Contour::single((0..80).map(|i| 4.0 * (i as f64 * dt).powi(2) - 2.0).collect(), dt);
        let bank = FunctionalBank::full();
        assert!((val(&bank, &c, Functional::QuadCurvature) - 4.0).abs() < 1e-6);
    }

    #[test]
    fn slopes_do_not_cross_segments() {
        let all = [100.0, 110.0, 0.0, 0.0, 300.0, 310.0];
        let mask = [true, true, false, false, true, true];
        let c = Contour::masked(&all, &mask, 0.01);
        assert_eq!(c.values, vec![100.0, 110.0, 300.0, 310.0]);
        assert_eq!(c.segment_starts, vec![0, 2]);
        let bank = FunctionalBank::full();
        assert!((val(&bank, &c, Functional::MeanRisingSlope) - 1000.0).abs() < 1e-9);
        assert_eq!(c.delta().values, vec![0.0, 10.0, 0.0, 10.0]);
    }

    #[test]
    fn empty_contour_is_zero() {
        let bank = FunctionalBank::full();
        let c = Contour::masked(&[1.0, 2.0], &[false, false], 0.01);
        assert!(bank.apply(&c).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn percentiles() {
        let s = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(percentile(&s, 50.0), 3.0);
        assert_eq!(percentile(&s, 25.0), 2.0);
        assert!((percentile(&s, 20.0) - 1.8).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn outputs_finite(vals in proptest::collection::vec(-1e4f64..1e4, 1..200)) {
            let c = Contour::single(vals, 0.01);
            prop_assert!(FunctionalBank::full().apply(&c).iter().all(|v| v.is_finite()));
        }
    }
}
