//! File and stream codecs. Binary formats are little-endian throughout;
//! text formats are UTF-8 with LF line endings.

pub mod iqframe;
pub mod scene_file;
pub mod tables;
pub mod timeline;

pub use iqframe::{FrameReader, IqFrame, SampleFormat, IQ_MAGIC, IQ_VERSION};
pub use scene_file::{parse_scene, read_scene, write_scene};
pub use tables::{
    parse_trace, read_profiles, read_trace, write_path_gain_csv, write_pdp_csv, write_profiles,
    write_report_csv, write_trace,
};
pub use timeline::{read_timeline, write_timeline, CIRT_HEADER_LEN, CIRT_MAGIC, CIRT_VERSION};
