//! Comparison codecs decoded with the same PnP machinery.

mod block_cs;
mod random_ds;

pub use block_cs::{
    block_cs_decode, block_cs_decode_with_reference, block_cs_encode, BlockCsOperator,
    BLOCK_CS_LEN, BLOCK_CS_SIZE,
};
pub use random_ds::{
    random_ds_decode, random_ds_decode_with_reference, random_ds_encode, RandomDsPattern,
};
