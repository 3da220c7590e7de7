//! Dataset CSV: columns `x1..xp,y,contaminated`, flag written as 0/1.

use std::io::{Read, Write};

use robust_elicit_core::datagen::{Dataset, Task};
use robust_elicit_core::linalg::Matrix;

use crate::error::{HarnessError, Result};
use crate::metrics::format_float;

pub fn write_dataset<W: Write>(w: W, data: &Dataset) -> Result<()> {
    let p = data.p();
    let mut out = csv::Writer::from_writer(w);
    let mut header: Vec<String> = (1..=p).map(|j| format!("x{j}")).collect();
    header.push("y".into());
    header.push("contaminated".into());
    out.write_record(&header)?;
    for i in 0..data.len() {
        let mut rec: Vec<String> = data.x.row(i).iter().map(|&v| format_float(v)).collect();
        rec.push(format_float(data.y[i]));
        rec.push(if data.contaminated[i] { "1" } else { "0" }.into());
        out.write_record(&rec)?;
    }
    out.flush().map_err(|e| HarnessError::format("dataset csv", e.to_string()))
}

/// Reads a dataset; the `contaminated` column is optional.
pub fn read_dataset<R: Read>(r: R, task: Task) -> Result<Dataset> {
    let bad = |reason: String| HarnessError::format("dataset csv", reason);
    let mut reader = csv::Reader::from_reader(r);
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    let has_flag = header.last().is_some_and(|h| h == "contaminated");
    let p = header.len().saturating_sub(1 + usize::from(has_flag));
    let expected: Vec<String> = (1..=p).map(|j| format!("x{j}")).chain(["y".to_string()]).collect();
    if p == 0 || header[..=p] != expected[..] {
        return Err(bad(format!("expected header x1..xp,y[,contaminated], got `{}`", header.join(","))));
    }
    let mut xs = Vec::new();
    let mut y = Vec::new();
    let mut contaminated = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let rec = record?;
        let num = |j: usize| -> Result<f64> {
            rec[j].trim().parse().map_err(|_| bad(format!("row {}: `{}` is not a number", line + 1, &rec[j])))
        };
        for j in 0..p {
            xs.push(num(j)?);
        }
        y.push(num(p)?);
        contaminated.push(match has_flag {
            false => false,
            true => match rec[p + 1].trim() {
                "0" | "false" => false,
                "1" | "true" => true,
                other => return Err(bad(format!("row {}: flag `{other}` is not 0/1", line + 1))),
            },
        });
    }
    if y.is_empty() {
        return Err(bad("no data rows".into()));
    }
    let x = Matrix::from_vec(y.len(), p, xs)?;
    Ok(Dataset { task, x, y, contaminated, beta_true: Vec::new(), sigma: f64::NAN })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let x = Matrix::from_vec(3, 2, vec![0.1, -2.5, 1e-20, 3.0, 7.0, 1.0 / 3.0]).unwrap();
        let data = Dataset {
            task: Task::Regression,
            x,
            y: vec![1.0, 50.0, -0.25],
            contaminated: vec![false, true, false],
            beta_true: vec![],
            sigma: f64::NAN,
        };
        let mut buf = Vec::new();
        write_dataset(&mut buf, &data).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("x1,x2,y,contaminated\n"));
        let back = read_dataset(buf.as_slice(), Task::Regression).unwrap();
        assert_eq!(back.x, data.x);
        assert_eq!(back.y, data.y);
        assert_eq!(back.contaminated, data.contaminated);
    }

    #[test]
    fn flag_column_is_optional_and_header_is_checked() {
        let d = read_dataset("x1,y\n1,2\n3,4\n".as_bytes(), Task::Regression).unwrap();
        assert_eq!(d.len(), 2);
        assert!(read_dataset("a,y\n1,2\n".as_bytes(), Task::Regression).is_err());
        assert!(read_dataset("x1,y\n1,oops\n".as_bytes(), Task::Regression).is_err());
    }
}
