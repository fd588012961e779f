//! Binary little-endian PLY in the usual Gaussian-splat layout.
//!
//! Each vertex holds `x y z`, `f_dc_0..2`, `f_rest_*`, `opacity`,
//! `scale_0..2`, `rot_0..3` as 32-bit floats. `f_rest` is channel-major:
//! `f_rest[c * (K - 1) + (k - 1)]` is coefficient `k` of channel `c`.
//! Other float properties (normals, for instance) are ignored on load.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{sh, Gaussian3D};

fn err(offset: usize, message: impl Into<String>) -> Error {
    Error::Ply {
        offset: offset as u64,
        message: message.into(),
    }
}

fn property_names(degree: usize) -> Vec<String> {
    let rest = 3 * (sh::coeff_count(degree) - 1);
    let mut v: Vec<String> = ["x", "y", "z", "f_dc_0", "f_dc_1", "f_dc_2"].map(String::from).to_vec();
    v.extend((0..rest).map(|i| format!("f_rest_{i}")));
    v.push("opacity".into());
    v.extend((0..3).map(|i| format!("scale_{i}")));
    v.extend((0..4).map(|i| format!("rot_{i}")));
    v
}

pub fn encode_scene(scene: &[Gaussian3D<f32>]) -> Result<Vec<u8>> {
    let degree = match scene.first() {
        Some(g) => g.sh_degree()?,
        None => 0,
    };
    let k = sh::coeff_count(degree);
    if let Some(i) = scene.iter().position(|g| g.sh.len() != k) {
        return Err(Error::DimensionMismatch(format!(
            "gaussian {i} has a different SH degree"
        )));
    }
    let names = property_names(degree);
    let mut out = Vec::with_capacity(256 + scene.len() * names.len() * 4);
    write!(
        out,
        "ply\nformat binary_little_endian 1.0\nelement vertex {}\n",
        scene.len()
    )?;
    for n in &names {
        writeln!(out, "property float {n}")?;
    }
    out.extend_from_slice(b"end_header\n");
    for g in scene {
        let mut put = |v: f32| out.extend_from_slice(&v.to_le_bytes());
        g.mean.iter().for_each(|&v| put(v));
        g.sh[0].iter().for_each(|&v| put(v));
        for c in 0..3 {
            for coeff in &g.sh[1..] {
                put(coeff[c]);
            }
        }
        put(g.opacity_logit);
        g.log_scale.iter().for_each(|&v| put(v));
        g.rotation.iter().for_each(|&v| put(v));
    }
    Ok(out)
}

pub fn save_scene(scene: &[Gaussian3D<f32>], path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_scene(scene)?)?;
    Ok(())
}

pub fn load_scene(path: impl AsRef<Path>) -> Result<Vec<Gaussian3D<f32>>> {
    decode_scene(&fs::read(path)?)
}

struct Header {
    count: usize,
    props: Vec<String>,
    body: usize,
}

fn parse_header(bytes: &[u8]) -> Result<Header> {
    let mut pos = 0;
    let mut line_no = 0;
    let mut count = None;
    let mut props = Vec::new();
    let mut in_vertex = false;
    loop {
        let Some(len) = bytes[pos..].iter().position(|&b| b == b'\n') else {
            return Err(err(pos, "header has no end_header line"));
        };
        let line = std::str::from_utf8(&bytes[pos..pos + len])
            .map_err(|_| err(pos, "header is not ASCII"))?
            .trim_end_matches('\r');
        let start = pos;
        pos += len + 1;
        line_no += 1;
        let words: Vec<&str> = line.split_whitespace().collect();
        match words.as_slice() {
            ["ply"] if line_no == 1 => {}
            _ if line_no == 1 => return Err(err(0, "missing 'ply' magic")),
            ["format", "binary_little_endian", "1.0"] => {}
            ["format", f, ..] => return Err(err(start, format!("unsupported format '{f}'"))),
            ["comment", ..] | ["obj_info", ..] => {}
            ["element", "vertex", n] => {
                let n = n.parse().map_err(|_| err(start, format!("bad vertex count '{n}'")))?;
                count = Some(n);
                in_vertex = true;
            }
            ["element", name, n] => {
                if *n != "0" {
                    return Err(err(start, format!("unsupported element '{name}'")));
                }
                in_vertex = false;
            }
            ["property", ty, name] if in_vertex => {
                if !matches!(*ty, "float" | "float32") {
                    return Err(err(start, format!("unsupported property type '{ty}' for '{name}'")));
                }
                props.push(name.to_string());
            }
            ["property", ..] if !in_vertex => return Err(err(start, "property outside the vertex element")),
            ["end_header"] => break,
            _ => return Err(err(start, format!("malformed header line '{line}'"))),
        }
    }
    let count = count.ok_or_else(|| err(pos, "no vertex element"))?;
    Ok(Header {
        count,
        props,
        body: pos,
    })
}

pub fn decode_scene(bytes: &[u8]) -> Result<Vec<Gaussian3D<f32>>> {
    let h = parse_header(bytes)?;
    let index: HashMap<&str, usize> = h.props.iter().enumerate().map(|(i, p)| (p.as_str(), i)).collect();
    let rest = h.props.iter().filter(|p| p.starts_with("f_rest_")).count();
    if rest % 3 != 0 {
        return Err(err(h.body, format!("{rest} f_rest properties is not a multiple of 3")));
    }
    let degree = sh::degree_for_count(rest / 3 + 1)
        .map_err(|_| err(h.body, format!("{rest} f_rest properties match no SH degree")))?;
    let mut slots = Vec::new();
    for name in property_names(degree) {
        match index.get(name.as_str()) {
            Some(&i) => slots.push(i),
            None => return Err(err(h.body, format!("missing property '{name}'"))),
        }
    }
    let stride = h.props.len() * 4;
    let k = sh::coeff_count(degree);
    let mut out = Vec::with_capacity(h.count);
    for r in 0..h.count {
        let off = h.body + r * stride;
        if bytes.len() < off + stride {
            return Err(err(
                off,
                format!("truncated body: record {} of {} is incomplete", r + 1, h.count),
            ));
        }
        let rec = &bytes[off..off + stride];
        let f = |slot: usize| {
            let i = slots[slot] * 4;
            f32::from_le_bytes([rec[i], rec[i + 1], rec[i + 2], rec[i + 3]])
        };
        let mut coeffs = vec![[0.0f32; 3]; k];
        coeffs[0] = [f(3), f(4), f(5)];
        for c in 0..3 {
            for j in 1..k {
                coeffs[j][c] = f(6 + c * (k - 1) + (j - 1));
            }
        }
        let b = 6 + 3 * (k - 1);
        out.push(Gaussian3D {
            mean: [f(0), f(1), f(2)],
            log_scale: [f(b + 1), f(b + 2), f(b + 3)],
            rotation: [f(b + 4), f(b + 5), f(b + 6), f(b + 7)],
            opacity_logit: f(b),
            sh: coeffs,
        });
    }
    let end = h.body + h.count * stride;
    if bytes.len() > end {
        return Err(err(
            end,
            format!("{} trailing bytes after the last record", bytes.len() - end),
        ));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(degree: usize) -> Gaussian3D<f32> {
        let k = sh::coeff_count(degree);
        Gaussian3D {
            mean: [1.0, -2.0, 3.5],
            log_scale: [-1.0, -2.0, -3.0],
            rotation: [0.5, 0.5, -0.5, 0.5],
            opacity_logit: 0.25,
            sh: (0..k).map(|i| [i as f32, i as f32 + 0.5, -(i as f32)]).collect(),
        }
    }

    #[test]
    fn golden_single_vertex() {
        let bytes = encode_scene(&[g(0)]).unwrap();
        let mut want = b"ply\nformat binary_little_endian 1.0\nelement vertex 1\n".to_vec();
        for p in [
            "x", "y", "z", "f_dc_0", "f_dc_1", "f_dc_2", "opacity", "scale_0", "scale_1", "scale_2", "rot_0", "rot_1",
            "rot_2", "rot_3",
        ] {
            want.extend_from_slice(format!("property float {p}\n").as_bytes());
        }
        want.extend_from_slice(b"end_header\n");
        for v in [
            1.0f32, -2.0, 3.5, 0.0, 0.5, -0.0, 0.25, -1.0, -2.0, -3.0, 0.5, 0.5, -0.5, 0.5,
        ] {
            want.extend_from_slice(&v.to_le_bytes());
        }
        assert_eq!(bytes, want);
        assert_eq!(decode_scene(&want).unwrap(), vec![g(0)]);
    }

    #[test]
    fn degree_three_has_45_rest_fields() {
        let bytes = encode_scene(&[g(3)]).unwrap();
        let text = String::from_utf8_lossy(&bytes);
        assert!(text.contains("f_rest_44\n") && !text.contains("f_rest_45"));
        let back = decode_scene(&bytes).unwrap();
        assert_eq!(back[0].sh_degree().unwrap(), 3);
        assert_eq!(back, vec![g(3)]);
    }

    #[test]
    fn empty_scene() {
        let bytes = encode_scene(&[]).unwrap();
        assert!(String::from_utf8_lossy(&bytes).contains("element vertex 0\n"));
        assert!(decode_scene(&bytes).unwrap().is_empty());
    }

    #[test]
    fn truncated_body_names_record() {
        let scene = vec![g(1); 10];
        let bytes = encode_scene(&scene).unwrap();
        let stride = 4 * (14 + 9);
        let cut = &bytes[..bytes.len() - stride];
        match decode_scene(cut).unwrap_err() {
            Error::Ply { offset, message } => {
                assert!(message.contains("record 10 of 10"), "{message}");
                assert_eq!(offset as usize, cut.len());
            }
            e => panic!("{e:?}"),
        }
    }

    #[test]
    fn extra_float_properties_are_ignored() {
        let mut text = String::from("ply\nformat binary_little_endian 1.0\nelement vertex 1\n");
        let mut names = property_names(0);
        names.insert(3, "nx".into());
        for n in &names {
            text.push_str(&format!("property float {n}\n"));
        }
        text.push_str("end_header\n");
        let mut bytes = text.into_bytes();
        for (i, _) in names.iter().enumerate() {
            bytes.extend_from_slice(&(i as f32).to_le_bytes());
        }
        let s = decode_scene(&bytes).unwrap();
        assert_eq!(s[0].mean, [0.0, 1.0, 2.0]);
        assert_eq!(s[0].sh[0], [4.0, 5.0, 6.0]);
    }

    #[test]
    fn header_errors_carry_offsets() {
        let bad = b"ply\nformat ascii 1.0\nelement vertex 0\nend_header\n";
        assert!(matches!(decode_scene(bad), Err(Error::Ply { offset: 4, .. })));
        let bad = b"ply\nformat binary_little_endian 1.0\nelement vertex 1\nproperty uchar red\nend_header\n";
        assert!(matches!(decode_scene(bad), Err(Error::Ply { offset: 53, .. })));
        assert!(matches!(decode_scene(b"plx\n"), Err(Error::Ply { offset: 0, .. })));
        let missing = b"ply\nformat binary_little_endian 1.0\nelement vertex 0\nproperty float x\nend_header\n";
        assert!(decode_scene(missing).is_err());
    }
}
