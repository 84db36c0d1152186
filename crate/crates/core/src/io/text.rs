use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{io_err, IoError};
use crate::linalg::Vec3;
use crate::particles::Particle;
use crate::scalar::Real;

fn f<T: Real>(v: T) -> f64 {
    v.to_f64_lossy()
}

/// `step,x,y,z`, one row per recorded point.
pub fn trace_csv<T: Real>(points: &[Vec3<T>]) -> String {
    let mut s = String::from("step,x,y,z\n");
    for (i, p) in points.iter().enumerate() {
        writeln!(s, "{i},{},{},{}", f(p[0]), f(p[1]), f(p[2])).unwrap();
    }
    s
}

/// `x,y,z,strength`, one row per particle.
pub fn particles_csv<T: Real>(particles: &[Particle<T>]) -> String {
    let mut s = String::from("x,y,z,strength\n");
    for p in particles {
        let w = p.pos.world();
        writeln!(s, "{},{},{},{}", f(w[0]), f(w[1]), f(w[2]), f(p.strength)).unwrap();
    }
    s
}

fn vtk_points<T: Real>(s: &mut String, title: &str, pts: impl ExactSizeIterator<Item = Vec3<T>>) {
    s.push_str("# vtk DataFile Version 3.0\n");
    writeln!(s, "{title}").unwrap();
    s.push_str("ASCII\nDATASET POLYDATA\n");
    writeln!(s, "POINTS {} double", pts.len()).unwrap();
    for p in pts {
        writeln!(s, "{} {} {}", f(p[0]), f(p[1]), f(p[2])).unwrap();
    }
}

/// Legacy VTK polydata with the trace as a single polyline.
pub fn trace_vtk<T: Real>(points: &[Vec3<T>]) -> String {
    let mut s = String::new();
    vtk_points(&mut s, "fempoint streamline", points.iter().copied());
    if !points.is_empty() {
        let n = points.len();
        writeln!(s, "LINES 1 {}", n + 1).unwrap();
        s.push_str(&n.to_string());
        for i in 0..n {
            write!(s, " {i}").unwrap();
        }
        s.push('\n');
    }
    s
}

/// Legacy VTK polydata with one vertex per particle and a `strength` scalar.
pub fn particles_vtk<T: Real>(particles: &[Particle<T>]) -> String {
    let n = particles.len();
    let mut s = String::new();
    vtk_points(&mut s, "fempoint particles", particles.iter().map(|p| p.pos.world()));
    writeln!(s, "VERTICES {n} {}", 2 * n).unwrap();
    for i in 0..n {
        writeln!(s, "1 {i}").unwrap();
    }
    writeln!(s, "POINT_DATA {n}").unwrap();
    s.push_str("SCALARS strength double 1\nLOOKUP_TABLE default\n");
    for p in particles {
        writeln!(s, "{}", f(p.strength)).unwrap();
    }
    s
}

fn write(path: &Path, text: String) -> Result<(), IoError> {
    fs::write(path, text).map_err(io_err(path))
}

pub fn write_trace_csv<T: Real>(points: &[Vec3<T>], path: &Path) -> Result<(), IoError> {
    write(path, trace_csv(points))
}

pub fn write_trace_vtk<T: Real>(points: &[Vec3<T>], path: &Path) -> Result<(), IoError> {
    write(path, trace_vtk(points))
}

pub fn write_particles_csv<T: Real>(particles: &[Particle<T>], path: &Path) -> Result<(), IoError> {
    write(path, particles_csv(particles))
}

pub fn write_particles_vtk<T: Real>(particles: &[Particle<T>], path: &Path) -> Result<(), IoError> {
    write(path, particles_vtk(particles))
}
