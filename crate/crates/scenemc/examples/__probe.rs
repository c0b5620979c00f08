// scratch probe — not part of the crate
use scenemc::render3d::*;

fn main() {
    let cam = Camera::standard(72, 40);
    let scene = RoadScene { road_width: 6, road_height: 100, lane_pos_x: -0.5, lane_pos_y: -2.0, lane_pos_z: 2.0, lane_size: 0.3 };
    let img = render_road(&scene, &cam);
    let chars = ['.', ',', '#', '|'];
    for y in 0..img.height() {
        let row: String = (0..img.width()).map(|x| chars[img.get(x, y) as usize]).collect();
        println!("{row}");
    }
}
