//! Plain-text dumps of meshes, nodal solutions and far fields.

use std::io::Write;
use std::path::Path;

use num_complex::Complex64;

use super::farfield::FarField;
use super::mesh::Mesh;
use crate::error::FemError;

/// Vertex count, vertices, triangle count, triangles.
pub fn write_mesh(path: &Path, mesh: &Mesh) -> Result<(), FemError> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "{}", mesh.vertices.len())?;
    for p in &mesh.vertices {
        writeln!(f, "{:.17e} {:.17e}", p.x, p.y)?;
    }
    writeln!(f, "{}", mesh.triangles.len())?;
    for (t, inside) in mesh.triangles.iter().zip(&mesh.inside) {
        writeln!(f, "{} {} {} {}", t[0], t[1], t[2], u8::from(*inside))?;
    }
    Ok(())
}

pub fn write_solution_csv(path: &Path, mesh: &Mesh, w: &[Complex64]) -> Result<(), FemError> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "x,y,re_w,im_w")?;
    for (p, z) in mesh.vertices.iter().zip(w) {
        writeln!(f, "{:.17e},{:.17e},{:.17e},{:.17e}", p.x, p.y, z.re, z.im)?;
    }
    Ok(())
}

pub fn write_far_field_csv(path: &Path, ff: &FarField) -> Result<(), FemError> {
    write_pattern_csv(path, &ff.theta, &ff.values)
}

pub fn write_pattern_csv(path: &Path, theta: &[f64], values: &[Complex64]) -> Result<(), FemError> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "theta,re_u_inf,im_u_inf")?;
    for (th, z) in theta.iter().zip(values) {
        writeln!(f, "{:.17e},{:.17e},{:.17e}", th, z.re, z.im)?;
    }
    Ok(())
}
