//! Turning camera frames and files into wander traces.
//!
//! Pixel coordinates put the origin at the centre of pixel (0, 0), with x
//! running along columns and y along rows.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::FadingTrace;
use crate::error::{domain, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WanderTrace {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    #[serde(rename = "sample_period_s")]
    pub sample_period: f64,
    pub units: String,
    /// Per-axis means removed by [`mean_center`], in original units.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<[f64; 2]>,
}

impl WanderTrace {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>, sample_period: f64, units: impl Into<String>) -> Result<Self> {
        let t = Self {
            xs,
            ys,
            sample_period,
            units: units.into(),
            center: None,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.xs.len() != self.ys.len() {
            return Err(Error::LengthMismatch {
                what: "trace axes",
                left: self.xs.len(),
                right: self.ys.len(),
            });
        }
        if !(self.sample_period > 0.0 && self.sample_period.is_finite()) {
            return domain(format!("sample period must be positive, got {}", self.sample_period));
        }
        if self.xs.iter().chain(&self.ys).any(|v| !v.is_finite()) {
            return domain("trace contains non-finite values");
        }
        Ok(())
    }

    /// Truncate both axes to the first `n` samples.
    pub fn truncate(&mut self, n: usize) {
        self.xs.truncate(n);
        self.ys.truncate(n);
    }
}

/// Non-negative intensities stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct IntensityGrid {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
    /// Metres per pixel, when known.
    pub pixel_pitch: Option<f64>,
}

impl IntensityGrid {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::LengthMismatch {
                what: "grid data and rows x cols",
                left: data.len(),
                right: rows * cols,
            });
        }
        if let Some(v) = data.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
            return domain(format!("intensities must be finite and non-negative, got {v}"));
        }
        Ok(Self {
            rows,
            cols,
            data,
            pixel_pitch: None,
        })
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let data = (0..rows).flat_map(|i| (0..cols).map(move |j| (i, j))).map(|(i, j)| f(i, j)).collect();
        Self::new(rows, cols, data)
    }

    pub fn with_pixel_pitch(mut self, pitch: f64) -> Self {
        self.pixel_pitch = Some(pitch);
        self
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(0.0, f64::max)
    }

    /// Zero every pixel below `fraction` of the frame maximum.
    pub fn threshold(&mut self, fraction: f64) {
        let cut = fraction * self.max();
        for v in self.data.iter_mut() {
            if *v < cut {
                *v = 0.0;
            }
        }
    }
}

/// Intensity-weighted centroid `(x, y)` in pixels.
pub fn weighted_centroid(grid: &IntensityGrid) -> Result<(f64, f64)> {
    let (mut total, mut sx, mut sy) = (0.0, 0.0, 0.0);
    for i in 0..grid.rows {
        let row = &grid.data[i * grid.cols..(i + 1) * grid.cols];
        let mut row_total = 0.0;
        for (j, g) in row.iter().enumerate() {
            row_total += g;
            sx += j as f64 * g;
        }
        total += row_total;
        sy += i as f64 * row_total;
    }
    if !(total > 0.0) {
        return domain("grid has no positive intensity");
    }
    Ok((sx / total, sy / total))
}

/// Centroid every frame, convert to metres when the frames carry a pixel
/// pitch, and remove the mean position.
pub fn centroid_trace(frames: &[IntensityGrid], sample_period: f64) -> Result<WanderTrace> {
    let first = frames
        .first()
        .ok_or_else(|| Error::InsufficientData("no frames to centroid".into()))?;
    let pitch = first.pixel_pitch;
    for (index, f) in frames.iter().enumerate() {
        if (f.rows, f.cols) != (first.rows, first.cols) {
            return Err(Error::Frame {
                index,
                message: format!("size {}x{} differs from {}x{}", f.rows, f.cols, first.rows, first.cols),
            });
        }
        if f.pixel_pitch != pitch {
            return Err(Error::Frame {
                index,
                message: "pixel pitch differs from the first frame".into(),
            });
        }
    }
    let centres = frames
        .par_iter()
        .enumerate()
        .map(|(index, f)| {
            weighted_centroid(f).map_err(|e| Error::Frame {
                index,
                message: e.to_string(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let scale = pitch.unwrap_or(1.0);
    let units = if pitch.is_some() { "m" } else { "pixels" };
    let (xs, ys) = centres.into_iter().map(|(x, y)| (x * scale, y * scale)).unzip();
    Ok(mean_center(&WanderTrace::new(xs, ys, sample_period, units)?))
}

/// Subtract the per-axis sample means. Removed means accumulate in
/// `center`.
pub fn mean_center(trace: &WanderTrace) -> WanderTrace {
    let mx = crate::stats::mean(&trace.xs);
    let my = crate::stats::mean(&trace.ys);
    let [cx, cy] = trace.center.unwrap_or([0.0, 0.0]);
    WanderTrace {
        xs: trace.xs.iter().map(|x| x - mx).collect(),
        ys: trace.ys.iter().map(|y| y - my).collect(),
        sample_period: trace.sample_period,
        units: trace.units.clone(),
        center: Some([cx + mx, cy + my]),
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Sidecar {
    units: String,
    sample_period_s: f64,
}

/// Location of the JSON metadata file written next to a trace CSV.
pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("json")
}

const TRACE_HEADER: [&str; 3] = ["t_s", "x", "y"];

/// Write `t_s,x,y` rows plus a JSON sidecar carrying units and sample
/// period.
pub fn write_trace(trace: &WanderTrace, path: &Path) -> Result<()> {
    trace.validate()?;
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(TRACE_HEADER)?;
    for (k, (x, y)) in trace.xs.iter().zip(&trace.ys).enumerate() {
        let t = k as f64 * trace.sample_period;
        w.write_record([t.to_string(), x.to_string(), y.to_string()])?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    let side = Sidecar {
        units: trace.units.clone(),
        sample_period_s: trace.sample_period,
    };
    let side_path = sidecar_path(path);
    fs::write(&side_path, serde_json::to_string_pretty(&side)? + "\n").map_err(|e| Error::io(&side_path, e))
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

/// Read a `t_s,x,y` trace. Times must increase with uniform spacing to
/// 1e-6 relative. Units and sample period come from the sidecar when
/// present.
pub fn read_trace(path: &Path) -> Result<WanderTrace> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let mut records = r.records();
    let header = match records.next() {
        Some(rec) => rec?,
        None => return Err(parse_err(path, 1, "empty file")),
    };
    if header.iter().collect::<Vec<_>>() != TRACE_HEADER {
        return Err(parse_err(path, 1, format!("expected header t_s,x,y, got {:?}", header.iter().collect::<Vec<_>>())));
    }
    let (mut ts, mut xs, mut ys) = (Vec::new(), Vec::new(), Vec::new());
    for rec in records {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() != 3 {
            return Err(parse_err(path, line, format!("expected 3 fields, got {}", rec.len())));
        }
        let mut vals = [0.0; 3];
        for (v, field) in vals.iter_mut().zip(rec.iter()) {
            *v = field
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| parse_err(path, line, format!("not a finite number: {field:?}")))?;
        }
        ts.push(vals[0]);
        xs.push(vals[1]);
        ys.push(vals[2]);
    }
    let side_path = sidecar_path(path);
    let side: Option<Sidecar> = if side_path.exists() {
        let text = fs::read_to_string(&side_path).map_err(|e| Error::io(&side_path, e))?;
        Some(serde_json::from_str(&text)?)
    } else {
        None
    };
    let dt = match (&side, ts.len()) {
        (Some(s), _) => s.sample_period_s,
        (None, n) if n >= 2 => (ts[n - 1] - ts[0]) / (n - 1) as f64,
        _ => return Err(parse_err(path, 2, "cannot infer a sample period from fewer than 2 rows without a sidecar")),
    };
    if !(dt > 0.0) {
        return Err(parse_err(path, 2, format!("sample period must be positive, got {dt}")));
    }
    for (k, w) in ts.windows(2).enumerate() {
        let step = w[1] - w[0];
        if (step - dt).abs() > 1e-6 * dt {
            return Err(parse_err(
                path,
                k + 3,
                format!("non-uniform time step at data row {}: {step} vs {dt}", k + 1),
            ));
        }
    }
    let units = side.map_or_else(|| "unknown".to_string(), |s| s.units);
    WanderTrace::new(xs, ys, dt, units)
}

/// Write a `t_s,intensity` fading series.
pub fn write_fading(trace: &FadingTrace, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["t_s", "intensity"])?;
    for (k, i) in trace.intensities.iter().enumerate() {
        let t = k as f64 * trace.sample_period;
        w.write_record([t.to_string(), i.to_string()])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Read a `t_s,intensity` fading series. The sample period is taken from
/// the time column.
pub fn read_fading(path: &Path) -> Result<FadingTrace> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let mut records = r.records();
    let header = records.next().ok_or_else(|| parse_err(path, 1, "empty file"))??;
    if header.iter().collect::<Vec<_>>() != ["t_s", "intensity"] {
        return Err(parse_err(path, 1, "expected header t_s,intensity"));
    }
    let (mut ts, mut vals) = (Vec::new(), Vec::new());
    for rec in records {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() != 2 {
            return Err(parse_err(path, line, format!("expected 2 fields, got {}", rec.len())));
        }
        let num = |k: usize| {
            rec[k]
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| parse_err(path, line, format!("not a finite number: {:?}", &rec[k])))
        };
        ts.push(num(0)?);
        vals.push(num(1)?);
    }
    if vals.len() < 2 {
        return Err(parse_err(path, 2, "need at least 2 samples"));
    }
    let dt = (ts[ts.len() - 1] - ts[0]) / (ts.len() - 1) as f64;
    if !(dt > 0.0) {
        return Err(parse_err(path, 2, "time column must increase"));
    }
    Ok(FadingTrace {
        intensities: vals,
        sample_period: dt,
        gamma: None,
    })
}

/// Read every `.pgm` file in `dir` in file-name order.
pub fn read_pgm_dir(dir: &Path) -> Result<Vec<IntensityGrid>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("pgm")))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::InsufficientData(format!("no .pgm files in {}", dir.display())));
    }
    paths.par_iter().map(|p| read_pgm(p)).collect()
}

pub fn read_pgm(path: &Path) -> Result<IntensityGrid> {
    let img = image::ImageReader::open(path)
        .map_err(|e| Error::io(path, e))?
        .with_guessed_format()
        .map_err(|e| Error::io(path, e))?
        .decode()?
        .into_luma16();
    let (cols, rows) = img.dimensions();
    IntensityGrid::new(rows as usize, cols as usize, img.into_raw().into_iter().map(f64::from).collect())
}

/// Write a 16-bit binary PGM, scaling the frame maximum to 65535.
pub fn write_pgm(grid: &IntensityGrid, path: &Path) -> Result<()> {
    let max = grid.max();
    let scale = if max > 0.0 { 65535.0 / max } else { 0.0 };
    let raw: Vec<u16> = grid.data.iter().map(|v| (v * scale).round() as u16).collect();
    let img = image::ImageBuffer::<image::Luma<u16>, _>::from_raw(grid.cols as u32, grid.rows as u32, raw)
        .ok_or_else(|| Error::Domain("grid buffer does not match its dimensions".into()))?;
    img.save_with_format(path, image::ImageFormat::Pnm)?;
    Ok(())
}

/// Read frames from a CSV with header `frame,row,...` where each record
/// holds one image row: frame index, row index, then pixel values.
pub fn read_frames_csv(path: &Path) -> Result<Vec<IntensityGrid>> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let mut records = r.records();
    let header = records.next().ok_or_else(|| parse_err(path, 1, "empty file"))??;
    if header.get(0) != Some("frame") || header.get(1) != Some("row") || header.len() < 3 {
        return Err(parse_err(path, 1, "expected header frame,row,<pixel columns>"));
    }
    let cols = header.len() - 2;
    let mut frames: Vec<Vec<f64>> = Vec::new();
    let mut rows_seen: Vec<usize> = Vec::new();
    for rec in records {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() != cols + 2 {
            return Err(parse_err(path, line, format!("expected {} fields, got {}", cols + 2, rec.len())));
        }
        let idx = |k: usize| -> Result<usize> {
            rec[k]
                .parse::<usize>()
                .map_err(|_| parse_err(path, line, format!("bad index {:?}", &rec[k])))
        };
        let (frame, row) = (idx(0)?, idx(1)?);
        if frame == frames.len() {
            frames.push(Vec::new());
            rows_seen.push(0);
        }
        if frame + 1 != frames.len() || row != rows_seen[frame] {
            return Err(parse_err(path, line, format!("expected frame {} row {}", frames.len() - 1, rows_seen[frames.len() - 1])));
        }
        for field in rec.iter().skip(2) {
            let v = field
                .parse::<f64>()
                .map_err(|_| parse_err(path, line, format!("not a number: {field:?}")))?;
            frames[frame].push(v);
        }
        rows_seen[frame] += 1;
    }
    if frames.is_empty() {
        return Err(parse_err(path, 2, "no frames"));
    }
    frames
        .into_iter()
        .zip(rows_seen)
        .enumerate()
        .map(|(index, (data, rows))| {
            IntensityGrid::new(rows, cols, data).map_err(|e| Error::Frame {
                index,
                message: e.to_string(),
            })
        })
        .collect()
}

/// Write frames in the layout read by [`read_frames_csv`].
pub fn write_frames_csv(frames: &[IntensityGrid], path: &Path) -> Result<()> {
    let cols = frames.first().map_or(0, |f| f.cols);
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["frame".to_string(), "row".to_string()];
    header.extend((0..cols).map(|j| format!("c{j}")));
    w.write_record(&header)?;
    for (k, f) in frames.iter().enumerate() {
        if f.cols != cols {
            return Err(Error::Frame {
                index: k,
                message: format!("{} columns, expected {cols}", f.cols),
            });
        }
        for i in 0..f.rows {
            let mut rec = vec![k.to_string(), i.to_string()];
            rec.extend(f.data[i * cols..(i + 1) * cols].iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Render a Gaussian spot of `1/e²` radius `radius` (pixels) centred at
/// `(x, y)` pixel coordinates.
pub fn gaussian_spot(rows: usize, cols: usize, x: f64, y: f64, radius: f64) -> Result<IntensityGrid> {
    if !(radius > 0.0) {
        return domain(format!("spot radius must be positive, got {radius}"));
    }
    let k = 2.0 / (radius * radius);
    IntensityGrid::from_fn(rows, cols, |i, j| {
        let (dx, dy) = (j as f64 - x, i as f64 - y);
        (-k * (dx * dx + dy * dy)).exp()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arma::ArmaModel;
    use crate::rng::streams;
    use crate::stats;
    use proptest::prelude::*;

    #[test]
    fn centroid_examples() {
        let mut g = IntensityGrid::new(4, 5, vec![0.0; 20]).unwrap();
        g.data[2 * 5 + 3] = 7.0;
        assert_eq!(weighted_centroid(&g).unwrap(), (3.0, 2.0));
        let u = IntensityGrid::new(3, 3, vec![1.0; 9]).unwrap();
        assert_eq!(weighted_centroid(&u).unwrap(), (1.0, 1.0));
        let mut two = IntensityGrid::new(1, 5, vec![0.0; 5]).unwrap();
        two.data[0] = 1.0;
        two.data[4] = 1.0;
        assert_eq!(weighted_centroid(&two).unwrap().0, 2.0);
        let zero = IntensityGrid::new(2, 2, vec![0.0; 4]).unwrap();
        assert!(weighted_centroid(&zero).is_err());
        assert!(IntensityGrid::new(2, 2, vec![1.0, -1.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn symmetric_spot_is_exact() {
        let g = gaussian_spot(21, 31, 15.0, 10.0, 4.0).unwrap();
        let (x, y) = weighted_centroid(&g).unwrap();
        assert!((x - 15.0).abs() < 1e-12 && (y - 10.0).abs() < 1e-12);
    }

    #[test]
    fn centroid_trace_cases() {
        let f = gaussian_spot(9, 9, 4.0, 4.0, 2.0).unwrap();
        let t = centroid_trace(&vec![f.clone(); 5], 0.01).unwrap();
        assert!(t.xs.iter().chain(&t.ys).all(|v| v.abs() < 1e-12));
        assert_eq!(t.units, "pixels");

        let frames: Vec<_> = (0..5).map(|k| gaussian_spot(9, 40, 10.0 + k as f64, 4.0, 2.0).unwrap()).collect();
        let t = centroid_trace(&frames, 0.01).unwrap();
        for w in t.xs.windows(2) {
            assert!((w[1] - w[0] - 1.0).abs() < 1e-9);
        }
        assert!((t.center.unwrap()[0] - 12.0).abs() < 1e-9);

        let mut bad = frames.clone();
        bad[3] = IntensityGrid::new(9, 40, vec![0.0; 360]).unwrap();
        match centroid_trace(&bad, 0.01) {
            Err(Error::Frame { index, .. }) => assert_eq!(index, 3),
            other => panic!("{other:?}"),
        }
        assert!(centroid_trace(&[], 0.01).is_err());

        let metric: Vec<_> = frames.iter().cloned().map(|f| f.with_pixel_pitch(5e-6)).collect();
        let t = centroid_trace(&metric, 0.01).unwrap();
        assert_eq!(t.units, "m");
        assert!((t.xs[1] - t.xs[0] - 5e-6).abs() < 1e-15);
    }

    #[test]
    fn synthetic_frames_recover_path() {
        let m = ArmaModel::reference_link();
        let scale = 0.08;
        let xs: Vec<f64> = m.simulate_stream(300, 4, streams::X_AXIS, 200).unwrap().iter().map(|v| v * scale).collect();
        let ys: Vec<f64> = m.simulate_stream(300, 4, streams::Y_AXIS, 200).unwrap().iter().map(|v| v * scale).collect();
        let (c, size) = (48.0, 97);
        let frames: Vec<_> = xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| gaussian_spot(size, size, c + x, c + y, 6.0).unwrap())
            .collect();
        let t = centroid_trace(&frames, m.sample_period).unwrap();
        let want = mean_center(&WanderTrace::new(xs, ys, m.sample_period, "pixels").unwrap());
        let se: f64 = t
            .xs
            .iter()
            .zip(&want.xs)
            .chain(t.ys.iter().zip(&want.ys))
            .map(|(a, b)| (a - b).powi(2))
            .sum();
        let rms = (se / (2 * t.len()) as f64).sqrt();
        assert!(rms < 0.05, "rms {rms}");
    }

    #[test]
    fn mean_center_examples() {
        let t = WanderTrace::new(vec![1.0, 2.0, 3.0], vec![5.0, 5.0, 5.0], 1.0, "px").unwrap();
        let c = mean_center(&t);
        assert_eq!(c.xs, vec![-1.0, 0.0, 1.0]);
        assert_eq!(c.center, Some([2.0, 5.0]));
        let cc = mean_center(&c);
        assert_eq!(cc.xs, c.xs);
        assert_eq!(cc.center, c.center);
        let rv = stats::radial_variance(&t.xs, &t.ys).unwrap();
        assert!((rv - stats::radial_variance(&c.xs, &c.ys).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn trace_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trace.csv");
        let t = WanderTrace::new(
            vec![0.1, -1.0 / 3.0, 1e-17],
            vec![std::f64::consts::PI, 2.5e8, -0.0],
            1.0 / 300.0,
            "m",
        )
        .unwrap();
        write_trace(&t, &path).unwrap();
        let back = read_trace(&path).unwrap();
        assert_eq!(back, t);
        assert!(sidecar_path(&path).exists());
    }

    #[test]
    fn trace_without_sidecar_infers_period() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        fs::write(&path, "t_s,x,y\n0,1,2\n0.5,3,4\n1.0,5,6\n").unwrap();
        let t = read_trace(&path).unwrap();
        assert_eq!(t.sample_period, 0.5);
        assert_eq!(t.units, "unknown");
        assert_eq!(t.ys, vec![2.0, 4.0, 6.0]);
    }

    #[test]
    fn trace_rejections() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        fs::write(&path, "0,1,2\n1,3,4\n").unwrap();
        assert!(matches!(read_trace(&path), Err(Error::Parse { line: 1, .. })));

        fs::write(&path, "t_s,x,y\n0,1,2\n1,3,4\n2.1,3,4\n3,3,4\n").unwrap();
        let err = read_trace(&path).unwrap_err();
        assert!(matches!(err, Error::Parse { .. }));
        assert!(err.to_string().contains("row 2"), "{err}");

        fs::write(&path, "t_s,x,y\n0,1,2\n1,abc,4\n").unwrap();
        assert!(matches!(read_trace(&path), Err(Error::Parse { line: 3, .. })));
    }

    #[test]
    fn fading_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("fading.csv");
        let t = FadingTrace {
            intensities: vec![1.0, 0.25, 1.0 / 7.0, 1e-300],
            sample_period: 0.01,
            gamma: None,
        };
        write_fading(&t, &path).unwrap();
        let back = read_fading(&path).unwrap();
        assert_eq!(back.intensities, t.intensities);
        assert!((back.sample_period - 0.01).abs() < 1e-15);
        fs::write(&path, "t,i\n0,1\n").unwrap();
        assert!(read_fading(&path).is_err());
    }

    #[test]
    fn pgm_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        for k in 0..3 {
            let g = gaussian_spot(32, 40, 12.0 + 3.0 * k as f64, 16.0, 5.0).unwrap();
            write_pgm(&g, &dir.path().join(format!("f{k:03}.pgm"))).unwrap();
        }
        fs::write(dir.path().join("notes.txt"), "ignored").unwrap();
        let frames = read_pgm_dir(dir.path()).unwrap();
        assert_eq!(frames.len(), 3);
        assert_eq!((frames[0].rows, frames[0].cols), (32, 40));
        let t = centroid_trace(&frames, 0.01).unwrap();
        assert!((t.xs[2] - t.xs[0] - 6.0).abs() < 1e-3, "{:?}", t.xs);
    }

    #[test]
    fn frames_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("frames.csv");
        let frames: Vec<_> = (0..3).map(|k| gaussian_spot(5, 6, 2.0 + 0.5 * k as f64, 2.0, 2.0).unwrap()).collect();
        write_frames_csv(&frames, &path).unwrap();
        assert_eq!(read_frames_csv(&path).unwrap(), frames);
        fs::write(&path, "frame,row,c0,c1\n0,0,1,2\n0,2,1,2\n").unwrap();
        assert!(read_frames_csv(&path).is_err());
    }

    #[test]
    fn threshold_zeroes_background() {
        let mut g = IntensityGrid::new(1, 4, vec![0.05, 0.2, 1.0, 0.09]).unwrap();
        g.threshold(0.1);
        assert_eq!(g.data, vec![0.0, 0.2, 1.0, 0.0]);
    }

    proptest! {
        #[test]
        fn centroid_is_translation_equivariant(x in 8.0f64..20.0, y in 8.0f64..20.0, dx in 0usize..5) {
            let a = gaussian_spot(40, 40, x, y, 2.5).unwrap();
            let b = gaussian_spot(40, 40, x + dx as f64, y, 2.5).unwrap();
            let (ax, ay) = weighted_centroid(&a).unwrap();
            let (bx, by) = weighted_centroid(&b).unwrap();
            prop_assert!((bx - ax - dx as f64).abs() < 1e-9);
            prop_assert!((by - ay).abs() < 1e-9);
        }
    }
}
