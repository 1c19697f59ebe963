//! On-disk formats: feature vectors (text and binary), trained models,
//! anchor projections, rating files, and the id sidecar.
//!
//! Binary layouts are little-endian throughout. Text formats are written
//! canonically (shortest round-tripping float representation), so a
//! load/save cycle is byte-stable.

use std::fs;
use std::io::Write;
use std::path::Path;

use visreg_core::anchored::AnchorProjections;
use visreg_core::linalg::Mat;
use visreg_core::trainer::TrainReport;
use visreg_core::{LatentModel, RatingMatrix, RatingScale};

use crate::error::{CliError, CliResult};
use crate::ingest::{DatasetBundle, IdMap};

pub const MODEL_MAGIC: &[u8; 4] = b"VMF1";
pub const PROJECTIONS_MAGIC: &[u8; 4] = b"VANR";
pub const FEATURES_MAGIC: &[u8; 4] = b"VFEA";

struct Reader<'a> {
    data: &'a [u8],
    pos: usize,
    path: String,
}

impl<'a> Reader<'a> {
    fn new(data: &'a [u8], path: &Path) -> Self {
        Reader { data, pos: 0, path: path.display().to_string() }
    }

    fn take(&mut self, n: usize) -> CliResult<&'a [u8]> {
        if self.pos + n > self.data.len() {
            return Err(CliError::usage(format!("{}: file is truncated", self.path)));
        }
        let s = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn magic(&mut self, expected: &[u8; 4]) -> CliResult<()> {
        let got = self.take(4)?;
        if got != expected {
            return Err(CliError::usage(format!(
                "{}: bad magic (expected {:?})",
                self.path,
                std::str::from_utf8(expected).unwrap()
            )));
        }
        Ok(())
    }

    fn u32(&mut self) -> CliResult<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> CliResult<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f32(&mut self) -> CliResult<f32> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> CliResult<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn done(&self) -> CliResult<()> {
        if self.pos != self.data.len() {
            return Err(CliError::usage(format!(
                "{}: {} trailing bytes",
                self.path,
                self.data.len() - self.pos
            )));
        }
        Ok(())
    }
}

// ---- model (VMF1) ----

/// Writes a model: magic, u32 d, u32 raters, u32 items, then P and Q as
/// `d x count` row-major f64.
pub fn save_model(path: &Path, model: &LatentModel) -> CliResult<()> {
    let mut out = Vec::new();
    out.extend_from_slice(MODEL_MAGIC);
    out.extend_from_slice(&(model.d() as u32).to_le_bytes());
    out.extend_from_slice(&(model.num_raters() as u32).to_le_bytes());
    out.extend_from_slice(&(model.num_items() as u32).to_le_bytes());
    for k in 0..model.d() {
        for m in 0..model.num_raters() {
            out.extend_from_slice(&model.p_factor(m)[k].to_le_bytes());
        }
    }
    for k in 0..model.d() {
        for f in 0..model.num_items() {
            out.extend_from_slice(&model.q_factor(f)[k].to_le_bytes());
        }
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn load_model(path: &Path) -> CliResult<LatentModel> {
    let data = fs::read(path)
        .map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
    let mut r = Reader::new(&data, path);
    r.magic(MODEL_MAGIC)?;
    let d = r.u32()? as usize;
    let num_raters = r.u32()? as usize;
    let num_items = r.u32()? as usize;
    let mut p = Mat::zeros(num_raters, d);
    for k in 0..d {
        for m in 0..num_raters {
            p.row_mut(m)[k] = r.f64()?;
        }
    }
    let mut q = Mat::zeros(num_items, d);
    for k in 0..d {
        for f in 0..num_items {
            q.row_mut(f)[k] = r.f64()?;
        }
    }
    r.done()?;
    Ok(LatentModel::new(d, p, q)?)
}

// ---- projections (VANR) ----

/// Writes projections: magic, u32 anchors, u32 d, u32 feature dim, f64
/// lambda and kappa, then per anchor a u64 item id and the row-major f64
/// projection matrix.
pub fn save_projections(
    path: &Path,
    projections: &AnchorProjections,
    anchor_ids: &[u64],
) -> CliResult<()> {
    if anchor_ids.len() != projections.num_anchors() {
        return Err(CliError::runtime("anchor id list does not match the projections"));
    }
    let mut out = Vec::new();
    out.extend_from_slice(PROJECTIONS_MAGIC);
    out.extend_from_slice(&(projections.num_anchors() as u32).to_le_bytes());
    out.extend_from_slice(&(projections.d() as u32).to_le_bytes());
    out.extend_from_slice(&(projections.feature_dim() as u32).to_le_bytes());
    out.extend_from_slice(&projections.lambda().to_le_bytes());
    out.extend_from_slice(&projections.kappa().to_le_bytes());
    for (anchor, &ext) in anchor_ids.iter().enumerate() {
        out.extend_from_slice(&ext.to_le_bytes());
        for x in projections.projection(anchor).data() {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn load_projections(path: &Path) -> CliResult<(AnchorProjections, Vec<u64>)> {
    let data = fs::read(path)
        .map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
    let mut r = Reader::new(&data, path);
    r.magic(PROJECTIONS_MAGIC)?;
    let num_anchors = r.u32()? as usize;
    let d = r.u32()? as usize;
    let feature_dim = r.u32()? as usize;
    let lambda = r.f64()?;
    let kappa = r.f64()?;
    let mut ids = Vec::with_capacity(num_anchors);
    let mut mats = Vec::with_capacity(num_anchors);
    for _ in 0..num_anchors {
        ids.push(r.u64()?);
        let mut m = Mat::zeros(d, feature_dim);
        for x in m.data_mut() {
            *x = r.f64()?;
        }
        mats.push(m);
    }
    r.done()?;
    Ok((AnchorProjections::from_parts(d, feature_dim, lambda, kappa, mats)?, ids))
}

// ---- features ----

/// Text feature rows: header `#dim D`, then `item_id<TAB>f1,f2,...,fD`.
pub fn save_features_text(path: &Path, rows: &[(u64, Vec<f64>)]) -> CliResult<()> {
    let dim = rows.first().map(|(_, v)| v.len()).unwrap_or(0);
    let mut out = String::new();
    out.push_str(&format!("#dim {dim}\n"));
    for (id, vector) in rows {
        let fields: Vec<String> = vector.iter().map(|x| format!("{x}")).collect();
        out.push_str(&format!("{id}\t{}\n", fields.join(",")));
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn load_features_text(path: &Path) -> CliResult<Vec<(u64, Vec<f64>)>> {
    let content = fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
    let mut lines = content.lines().enumerate();
    let dim = loop {
        match lines.next() {
            Some((_, line)) if line.trim().is_empty() => continue,
            Some((i, line)) => {
                let line = line.trim();
                let rest = line.strip_prefix("#dim").ok_or_else(|| {
                    CliError::usage(format!("line {}: expected `#dim D` header", i + 1))
                })?;
                break rest.trim().parse::<usize>().map_err(|_| {
                    CliError::usage(format!("line {}: bad dimension in header", i + 1))
                })?;
            }
            None => return Err(CliError::usage(format!("{}: empty feature file", path.display()))),
        }
    };
    let mut rows = Vec::new();
    for (i, line) in lines {
        let line_no = i + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (id_field, values) = line.split_once('\t').ok_or_else(|| {
            CliError::usage(format!("line {line_no}: expected `item_id<TAB>f1,f2,...`"))
        })?;
        let id: u64 = id_field.trim().parse().map_err(|_| {
            CliError::usage(format!("line {line_no}: item id `{id_field}` is not an integer"))
        })?;
        let vector: Vec<f64> = values
            .split(',')
            .map(|v| {
                v.trim().parse::<f64>().map_err(|_| {
                    CliError::usage(format!("line {line_no}: `{v}` is not a number"))
                })
            })
            .collect::<CliResult<_>>()?;
        if vector.len() != dim {
            return Err(CliError::usage(format!(
                "line {line_no}: expected {dim} values, got {}",
                vector.len()
            )));
        }
        rows.push((id, vector));
    }
    Ok(rows)
}

/// Binary feature rows: magic, u32 count, u32 dim, then per row a u64
/// item id followed by `dim` f32 values.
pub fn save_features_binary(path: &Path, rows: &[(u64, Vec<f64>)]) -> CliResult<()> {
    let dim = rows.first().map(|(_, v)| v.len()).unwrap_or(0);
    let mut out = Vec::new();
    out.extend_from_slice(FEATURES_MAGIC);
    out.extend_from_slice(&(rows.len() as u32).to_le_bytes());
    out.extend_from_slice(&(dim as u32).to_le_bytes());
    for (id, vector) in rows {
        out.extend_from_slice(&id.to_le_bytes());
        for &x in vector {
            out.extend_from_slice(&(x as f32).to_le_bytes());
        }
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn load_features_binary(path: &Path) -> CliResult<Vec<(u64, Vec<f64>)>> {
    let data = fs::read(path)
        .map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
    let mut r = Reader::new(&data, path);
    r.magic(FEATURES_MAGIC)?;
    let count = r.u32()? as usize;
    let dim = r.u32()? as usize;
    let mut rows = Vec::with_capacity(count);
    for _ in 0..count {
        let id = r.u64()?;
        let mut vector = Vec::with_capacity(dim);
        for _ in 0..dim {
            vector.push(r.f32()? as f64);
        }
        rows.push((id, vector));
    }
    r.done()?;
    Ok(rows)
}

/// Loads either feature format, sniffing the binary magic.
pub fn load_features_any(path: &Path) -> CliResult<Vec<(u64, Vec<f64>)>> {
    let mut head = [0u8; 4];
    {
        use std::io::Read;
        let mut f = std::fs::File::open(path)
            .map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
        let n = f.read(&mut head)?;
        if n < 4 {
            return Err(CliError::usage(format!("{}: file too short", path.display())));
        }
    }
    if &head == FEATURES_MAGIC {
        load_features_binary(path)
    } else {
        load_features_text(path)
    }
}

// ---- rating files (canonical save side) ----

pub fn save_triplets(path: &Path, ratings: &RatingMatrix, bundle: &DatasetBundle) -> CliResult<()> {
    let mut out = String::new();
    for t in ratings.triplets() {
        out.push_str(&format!(
            "{},{},{}\n",
            bundle.rater_ids.external(t.rater),
            bundle.item_ids.external(t.item),
            t.value
        ));
    }
    fs::write(path, out)?;
    Ok(())
}

/// Canonical MovieLens serialization; timestamps were discarded on load
/// and are written as 0.
pub fn save_movielens(path: &Path, ratings: &RatingMatrix, bundle: &DatasetBundle) -> CliResult<()> {
    if ratings.scale() != RatingScale::Stars {
        return Err(CliError::usage("MovieLens files use the star scale"));
    }
    let mut out = String::new();
    for t in ratings.triplets() {
        out.push_str(&format!(
            "{}::{}::{}::0\n",
            bundle.rater_ids.external(t.rater),
            bundle.item_ids.external(t.item),
            t.value
        ));
    }
    fs::write(path, out)?;
    Ok(())
}

// ---- id sidecar ----

/// Writes the dense-index -> external-id tables next to a model so
/// predictions can be reported in the dataset's own ids.
pub fn save_id_sidecar(path: &Path, rater_ids: &IdMap, item_ids: &IdMap) -> CliResult<()> {
    let mut out = String::new();
    for &ext in rater_ids.externals() {
        out.push_str(&format!("rater,{ext}\n"));
    }
    for &ext in item_ids.externals() {
        out.push_str(&format!("item,{ext}\n"));
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn load_id_sidecar(path: &Path) -> CliResult<(IdMap, IdMap)> {
    let content = fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
    let mut raters = Vec::new();
    let mut items = Vec::new();
    for (i, line) in content.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (kind, id) = line.split_once(',').ok_or_else(|| {
            CliError::usage(format!("{}: line {}: expected `kind,id`", path.display(), i + 1))
        })?;
        let id: u64 = id.trim().parse().map_err(|_| {
            CliError::usage(format!("{}: line {}: bad id `{id}`", path.display(), i + 1))
        })?;
        match kind {
            "rater" => raters.push(id),
            "item" => items.push(id),
            other => {
                return Err(CliError::usage(format!(
                    "{}: line {}: unknown kind `{other}`",
                    path.display(),
                    i + 1
                )))
            }
        }
    }
    Ok((IdMap::from_externals(raters)?, IdMap::from_externals(items)?))
}

pub fn sidecar_path(model_path: &Path) -> std::path::PathBuf {
    let mut s = model_path.as_os_str().to_os_string();
    s.push(".ids");
    std::path::PathBuf::from(s)
}

// ---- training loss report ----

pub fn save_loss_report(path: &Path, report: &TrainReport) -> CliResult<()> {
    let mut f = std::io::BufWriter::new(fs::File::create(path)?);
    writeln!(f, "epoch,total,data,l2,visual")?;
    for (epoch, c) in report.epoch_loss.iter().enumerate() {
        writeln!(f, "{},{},{},{},{}", epoch + 1, c.total, c.data, c.l2, c.visual)?;
    }
    f.flush()?;
    Ok(())
}
