//! Plain-text writers shared by the solvers and the CLI.
//!
//! Floats are written with Rust's shortest round-trip formatting, so
//! identical results give identical bytes.

use std::fs;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;

use crate::error::Result;
use crate::farfield::FarField;
use crate::fields::{GridField, Point};
use crate::placement::ScattererCloud;

pub fn write_cloud(path: &Path, cloud: &ScattererCloud) -> Result<()> {
    fs::write(path, cloud.to_text())?;
    Ok(())
}

pub fn read_cloud(path: &Path) -> Result<ScattererCloud> {
    ScattererCloud::from_text(&fs::read_to_string(path)?)
}

/// `index,x,y,z,re_u,im_u`
pub fn write_values_csv(out: &mut dyn Write, centers: &[Point], values: &[Complex64]) -> Result<()> {
    writeln!(out, "index,x,y,z,re_u,im_u")?;
    for (i, (c, u)) in centers.iter().zip(values).enumerate() {
        writeln!(out, "{i},{},{},{},{},{}", c[0], c[1], c[2], u.re, u.im)?;
    }
    Ok(())
}

/// `i,j,l,x,y,z,re_u,im_u`, first index fastest.
pub fn write_grid_csv(out: &mut dyn Write, field: &GridField) -> Result<()> {
    let g = &field.grid;
    writeln!(out, "i,j,l,x,y,z,re_u,im_u")?;
    for (idx, u) in field.values.iter().enumerate() {
        let i = idx % g.extents[0];
        let j = (idx / g.extents[0]) % g.extents[1];
        let l = idx / (g.extents[0] * g.extents[1]);
        let x = g.node(idx);
        writeln!(out, "{i},{j},{l},{},{},{},{},{}", x[0], x[1], x[2], u.re, u.im)?;
    }
    Ok(())
}

/// `beta1,beta2,beta3,re_a,im_a`
pub fn write_far_field_csv(out: &mut dyn Write, ff: &FarField) -> Result<()> {
    writeln!(out, "beta1,beta2,beta3,re_a,im_a")?;
    for (b, a) in ff.directions.iter().zip(&ff.values) {
        writeln!(out, "{},{},{},{},{}", b[0], b[1], b[2], a.re, a.im)?;
    }
    Ok(())
}

/// `x,re_u,im_u`
pub fn write_line_csv(out: &mut dyn Write, xs: &[f64], values: &[Complex64]) -> Result<()> {
    writeln!(out, "x,re_u,im_u")?;
    for (x, u) in xs.iter().zip(values) {
        writeln!(out, "{x},{},{}", u.re, u.im)?;
    }
    Ok(())
}

/// Write `text` to `dir/name`, creating `dir`.
pub fn write_file(dir: &Path, name: &str, text: &str) -> Result<std::path::PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, text)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::GridSpec;

    #[test]
    fn csv_layouts() {
        let mut buf = Vec::new();
        write_values_csv(&mut buf, &[[0.5, 0.25, 1.0]], &[Complex64::new(1.0, -0.5)]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "index,x,y,z,re_u,im_u\n0,0.5,0.25,1,1,-0.5\n");

        let grid = GridSpec {
            origin: [0.0; 3],
            spacing: 0.5,
            extents: [2, 1, 1],
        };
        let field = GridField {
            grid,
            values: vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 2.0)],
        };
        let mut buf = Vec::new();
        write_grid_csv(&mut buf, &field).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().nth(2).unwrap(), "1,0,0,0.5,0,0,0,2");

        let ff = FarField::new(vec![[0.0, 0.0, 1.0]], vec![Complex64::new(0.1, 0.2)]).unwrap();
        let mut buf = Vec::new();
        write_far_field_csv(&mut buf, &ff).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "beta1,beta2,beta3,re_a,im_a\n0,0,1,0.1,0.2\n");
    }
}
