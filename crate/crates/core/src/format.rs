//! Portable text encoding of site sets.
//!
//! ```text
//! bootperc-siteset v1
//! d=2 n=3 boundary=open bit_order=index-lsb0
//! 1101
//! ```
//!
//! The third line is the hex encoding of the bitmap bytes: bit `i % 8` of byte
//! `i / 8` is site index `i` (row-major, axis 1 fastest).

use crate::error::{input, Error, Result};
use crate::lattice::{Boundary, LatticeShape, SiteSet};

const MAGIC: &str = "bootperc-siteset v1";
const BIT_ORDER: &str = "index-lsb0";

pub fn site_set_to_hex(set: &SiteSet) -> String {
    let shape = set.shape();
    let nbytes = shape.volume().div_ceil(8);
    let bytes: Vec<u8> = set
        .words()
        .iter()
        .flat_map(|w| w.to_le_bytes())
        .take(nbytes)
        .collect();
    format!(
        "{MAGIC}\nd={} n={} boundary={} bit_order={BIT_ORDER}\n{}\n",
        shape.d(),
        shape.n(),
        shape.boundary(),
        hex::encode(bytes)
    )
}

pub fn site_set_from_hex(text: &str) -> Result<SiteSet> {
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some(MAGIC) {
        return input("missing site set header");
    }
    let header = lines.next().ok_or_else(|| Error::Input("missing shape line".into()))?;
    let (mut d, mut n, mut boundary) = (None, None, None);
    for field in header.split_whitespace() {
        let (key, value) = field
            .split_once('=')
            .ok_or_else(|| Error::Input(format!("bad header field '{field}'")))?;
        let parse = |v: &str| {
            v.parse::<usize>()
                .map_err(|_| Error::Input(format!("bad number in header field '{field}'")))
        };
        match key {
            "d" => d = Some(parse(value)?),
            "n" => n = Some(parse(value)?),
            "boundary" => boundary = Some(value.parse::<Boundary>()?),
            "bit_order" if value == BIT_ORDER => {}
            _ => return input(format!("unsupported header field '{field}'")),
        }
    }
    let (Some(d), Some(n), Some(boundary)) = (d, n, boundary) else {
        return input("header must give d, n and boundary");
    };
    let shape = LatticeShape::new(d, n, boundary)?;
    let body = lines.next().unwrap_or("").trim();
    let bytes = hex::decode(body).map_err(|e| Error::Input(format!("bad hex payload: {e}")))?;
    if bytes.len() != shape.volume().div_ceil(8) {
        return input(format!(
            "payload has {} bytes, expected {}",
            bytes.len(),
            shape.volume().div_ceil(8)
        ));
    }
    let mut set = SiteSet::empty(shape);
    for i in 0..shape.volume() {
        if bytes[i / 8] >> (i % 8) & 1 == 1 {
            set.insert(i);
        }
    }
    for i in shape.volume()..bytes.len() * 8 {
        if bytes[i / 8] >> (i % 8) & 1 == 1 {
            return input("payload sets bits beyond the last site");
        }
    }
    Ok(set)
}
