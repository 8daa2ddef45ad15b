//! Decimal rounding on the shortest round-trip representation of a double.
//!
//! `2.675` is stored as `2.67499999999999982236431605997495353221893310546875`
//! but displayed as `2.675`; rounding works on the displayed digits so
//! `ROUND(2.675, 2)` gives `2.68`, as a spreadsheet user expects.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RoundMode {
    /// Ties away from zero.
    HalfAwayFromZero,
    /// Away from zero whenever any discarded digit is non-zero.
    Up,
    /// Toward zero.
    Down,
}

/// Round `x` to `digits` decimal places (negative digits round to tens,
/// hundreds, ...).
pub fn round_decimal(x: f64, digits: i32, mode: RoundMode) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    let negative = x < 0.0;
    // "d.ddddde±x" with the shortest digit string that round-trips
    let sci = format!("{:e}", x.abs());
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i64 = exp.parse().expect("exponent");
    let digits_str: Vec<u8> = mantissa.bytes().filter(|b| *b != b'.').collect();
    // value = 0.d1d2d3... × 10^(exp+1)
    let keep = exp + 1 + digits as i64;
    if keep >= digits_str.len() as i64 {
        return x;
    }
    let (kept, dropped): (&[u8], &[u8]) = if keep <= 0 {
        (&[], &digits_str[..])
    } else {
        digits_str.split_at(keep as usize)
    };
    let bump = match mode {
        RoundMode::Down => false,
        RoundMode::Up => dropped.iter().any(|d| *d != b'0'),
        // for keep < 0 the first dropped digit is a leading zero
        RoundMode::HalfAwayFromZero => keep >= 0 && dropped[0] >= b'5',
    };
    let mut int_digits: Vec<u8> = kept.to_vec();
    if bump {
        let mut i = int_digits.len();
        loop {
            if i == 0 {
                int_digits.insert(0, b'1');
                break;
            }
            i -= 1;
            if int_digits[i] == b'9' {
                int_digits[i] = b'0';
            } else {
                int_digits[i] += 1;
                break;
            }
        }
    }
    if int_digits.is_empty() {
        return 0.0;
    }
    // the kept digits are an integer scaled by 10^(exp + 1 - keep) = 10^-digits
    let text = format!(
        "{}{}e{}",
        if negative { "-" } else { "" },
        String::from_utf8(int_digits).expect("ascii digits"),
        -(digits as i64)
    );
    text.parse().expect("valid float text")
}

pub fn round_half_away(x: f64, digits: i32) -> f64 {
    round_decimal(x, digits, RoundMode::HalfAwayFromZero)
}
