//! Writes a scene and a camera set, reads them back and checks bit equality.

use gsraster::io::{decode_scene, encode_scene, CameraEntry, CameraSet};
use gsraster::scenes;

fn main() -> anyhow::Result<()> {
    let sc = scenes::random_scene(50, 64, 64, 8).cast::<f32>();
    let bytes = encode_scene(&sc.gaussians)?;
    let header_end = bytes
        .windows(11)
        .position(|w| w == b"end_header\n")
        .map_or(0, |p| p + 11);
    print!("{}", String::from_utf8_lossy(&bytes[..header_end]));
    let back = decode_scene(&bytes)?;
    println!(
        "{} bytes, {} gaussians, identical: {}",
        bytes.len(),
        back.len(),
        back == sc.gaussians
    );

    let set = CameraSet {
        cameras: vec![CameraEntry::from_camera(0, &sc.camera, Some("view_0000.ppm".into()))],
    };
    let json = set.to_json();
    println!("{json}");
    println!("cameras identical: {}", CameraSet::from_json(&json)? == set);
    Ok(())
}
