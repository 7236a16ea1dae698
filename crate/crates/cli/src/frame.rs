//! Experiment frames as CSV: `sample_id, rule_id, treatment, level, y1, y0`
//! followed by one column per confounder.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use smellprop_core::causal::{default_control, ExperimentFrame, FrameRow};

const FIXED: [&str; 6] = ["sample_id", "rule_id", "treatment", "level", "y1", "y0"];

/// Splits CSV text into one frame per treatment family. The control level is
/// `control` when given, otherwise the family's default.
pub fn parse_frames(text: &str, origin: &str, control: Option<&str>) -> Result<Vec<ExperimentFrame>> {
    let mut reader = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let headers = reader.headers().with_context(|| format!("{origin}: reading header"))?.clone();
    for (k, name) in FIXED.iter().enumerate() {
        if headers.get(k) != Some(*name) {
            bail!("{origin}: column {} must be `{name}`, found {:?}", k + 1, headers.get(k));
        }
    }
    let feature_names: Vec<String> = headers.iter().skip(FIXED.len()).map(str::to_owned).collect();

    let mut families: BTreeMap<String, Vec<FrameRow>> = BTreeMap::new();
    for (k, record) in reader.records().enumerate() {
        let line = k + 2;
        let record = record.with_context(|| format!("{origin}: line {line}"))?;
        let num = |idx: usize| -> Result<f64> {
            let raw = record.get(idx).unwrap_or_default();
            raw.trim()
                .parse::<f64>()
                .map_err(|_| anyhow!("{origin}: line {line}: column `{}` is not a number: {raw:?}", &headers[idx]))
        };
        let covariates = (FIXED.len()..headers.len()).map(num).collect::<Result<Vec<_>>>()?;
        let row = FrameRow {
            sample_id: record[0].to_owned(),
            rule_id: record[1].to_owned(),
            level: record[3].to_owned(),
            y1: num(4)?,
            y0: num(5)?,
            covariates,
        };
        families.entry(record[2].to_owned()).or_default().push(row);
    }

    families
        .into_iter()
        .map(|(treatment, rows)| {
            let control = match control {
                Some(c) => c.to_owned(),
                None => default_control(&treatment)
                    .ok_or_else(|| anyhow!("{origin}: no default control for treatment `{treatment}`; pass --control"))?
                    .to_owned(),
            };
            let mut levels: Vec<String> = Vec::new();
            for r in &rows {
                if !levels.contains(&r.level) {
                    levels.push(r.level.clone());
                }
            }
            levels.sort();
            let frame = ExperimentFrame {
                treatment,
                control,
                levels,
                feature_names: feature_names.clone(),
                rows,
            };
            frame.validate().with_context(|| origin.to_owned())?;
            Ok(frame)
        })
        .collect()
}

pub fn read_frames(path: &Path, control: Option<&str>) -> Result<Vec<ExperimentFrame>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_frames(&text, &path.display().to_string(), control)
}

pub fn frame_csv(frame: &ExperimentFrame) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = FIXED.iter().map(|s| s.to_string()).collect();
    header.extend(frame.feature_names.iter().cloned());
    w.write_record(&header)?;
    for r in &frame.rows {
        let mut rec = vec![
            r.sample_id.clone(),
            r.rule_id.clone(),
            frame.treatment.clone(),
            r.level.clone(),
            r.y1.to_string(),
            r.y0.to_string(),
        ];
        rec.extend(r.covariates.iter().map(f64::to_string));
        w.write_record(&rec)?;
    }
    Ok(w.into_inner().map_err(|e| anyhow!("flushing frame CSV: {e}"))?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use smellprop_core::causal::synthetic::{planted_frame, PlantedScm};

    #[test]
    fn round_trip() {
        let frame = planted_frame(&PlantedScm::default(), 3);
        let text = String::from_utf8(frame_csv(&frame).unwrap()).unwrap();
        let back = parse_frames(&text, "mem", Some(&frame.control)).unwrap();
        assert_eq!(back.len(), 1);
        assert_eq!(back[0].rows, frame.rows);
        assert_eq!(back[0].feature_names, frame.feature_names);
    }

    #[test]
    fn header_and_numbers_are_checked() {
        assert!(parse_frames("id,rule_id,treatment,level,y1,y0\n", "x", None).is_err());
        let bad = "sample_id,rule_id,treatment,level,y1,y0,loc\na,W0611,T1,greedy,0.5,0.4,ten\n";
        let err = parse_frames(bad, "x", None).unwrap_err().to_string();
        assert!(err.contains("line 2"), "{err}");
    }

    #[test]
    fn default_control_per_family() {
        let text = "sample_id,rule_id,treatment,level,y1,y0\na,W0611,T1,greedy,0.5,0.4\nb,W0611,T1,beam,0.6,0.4\n";
        let frames = parse_frames(text, "x", None).unwrap();
        assert_eq!(frames[0].control, "greedy");
        assert!(parse_frames(&text.replace("T1", "T9"), "x", None).is_err());
    }
}
