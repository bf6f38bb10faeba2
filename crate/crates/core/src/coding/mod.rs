//! Scan orders, entropy coding and the intra frame codec.

pub mod bitstream;
pub mod codec;
pub mod predict;
pub mod range_coder;
pub mod residual;
pub mod scan;

pub use bitstream::{Bitstream, Header};
pub use codec::{decode_frame, decode_sequence, encode_frame, encode_sequence, CodecConfig, Encoded, Quantiser};
pub use predict::IntraMode;
pub use residual::{EntropyDecoder, EntropyEncoder};
pub use scan::{scan_order, ScanKind, ScanOrder};
