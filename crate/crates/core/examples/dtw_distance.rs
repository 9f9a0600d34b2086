// DTW with the angular frame distance used by ABX.

use ndarray::array;
use orthospeech::abx::{dtw_distance, dtw_outcome};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let x = array![[1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
    let slow = array![[1.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [0.0, 1.0]];
    let other = array![[0.0, 1.0], [-1.0, 0.0]];
    println!("x vs x          {}", dtw_distance(x.view(), x.view())?);
    println!("x vs slowed x   {}", dtw_distance(x.view(), slow.view())?);
    println!("x vs other      {:.4}", dtw_distance(x.view(), other.view())?);
    let silent = array![[0.0, 0.0]];
    let o = dtw_outcome(x.view(), silent.view())?;
    println!("x vs zero frame {} (zero-norm flagged: {})", o.distance, o.zero_norm);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
