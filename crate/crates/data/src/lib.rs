//! Dataset plumbing for RGB-D saliency training: bit-exact binary PPM/PGM
//! codecs, a deterministic synthetic scene generator, and the geometric
//! augmentations applied identically to colour, depth, and mask.

mod augment;
mod error;
mod pnm;
mod sample;
mod synth;

pub use augment::{augment, crop_resize, flip_h, resize_pair, rotate90};
pub use error::DataError;
pub use pnm::{read_pnm, write_pgm, write_ppm, Image8};
pub use sample::{load_sample, write_sample, DatasetManifest, SamplePair};
pub use synth::{generate_dataset, generate_sample};

pub type Result<T> = std::result::Result<T, DataError>;
