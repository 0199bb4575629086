//! CRC-16-CCITT (x^16 + x^12 + x^5 + 1), zero initial register, no final
//! XOR, bits processed MSB-first. The CRC is masked with the RNTI.

pub const CRC_LEN: usize = 16;

const POLY: u16 = 0x1021;

pub fn crc16(bits: &[u8]) -> u16 {
    let mut reg: u16 = 0;
    for &bit in bits {
        let feedback = ((reg >> 15) as u8 ^ (bit & 1)) != 0;
        reg <<= 1;
        if feedback {
            reg ^= POLY;
        }
    }
    reg
}

fn push_word(out: &mut Vec<u8>, word: u16) {
    out.extend((0..CRC_LEN).rev().map(|i| ((word >> i) & 1) as u8));
}

fn read_word(bits: &[u8]) -> u16 {
    bits.iter().fold(0u16, |acc, &b| (acc << 1) | u16::from(b & 1))
}

/// Appends the RNTI-masked CRC of `payload`.
pub fn attach_crc(payload: &[u8], rnti: u16) -> Vec<u8> {
    let mut block = Vec::with_capacity(payload.len() + CRC_LEN);
    block.extend(payload.iter().map(|b| b & 1));
    push_word(&mut block, crc16(payload) ^ rnti);
    block
}

/// Unmasks the trailing CRC with `rnti` and compares against the payload.
pub fn check_crc(block: &[u8], rnti: u16) -> bool {
    if block.len() < CRC_LEN {
        return false;
    }
    let (payload, tail) = block.split_at(block.len() - CRC_LEN);
    read_word(tail) ^ rnti == crc16(payload)
}
