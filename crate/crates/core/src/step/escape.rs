//! String literal escapes (`''`, `\\`, `\X\`, `\X2\`, `\X4\`, `\S\`, `\P?\`).

/// Decodes the body of a quoted string literal (without the outer quotes).
///
/// Backslashes that do not start a recognised directive are kept verbatim,
/// which tolerates Windows paths written by lax exporters.
pub(crate) fn decode_string(raw: &str) -> Result<String, String> {
    let chars: Vec<char> = raw.chars().collect();
    let mut out = String::with_capacity(raw.len());
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c == '\'' {
            // the lexer only lets doubled apostrophes through
            out.push('\'');
            i += 2;
            continue;
        }
        if c != '\\' {
            out.push(c);
            i += 1;
            continue;
        }
        let rest = &chars[i..];
        if starts_with(rest, "\\\\") {
            out.push('\\');
            i += 2;
        } else if starts_with(rest, "\\X2\\") {
            i += 4;
            let mut units = Vec::new();
            loop {
                if starts_with(&chars[i..], "\\X0\\") {
                    i += 4;
                    break;
                }
                let unit = hex_at(&chars, i, 4).ok_or("malformed \\X2\\ escape")?;
                units.push(unit as u16);
                i += 4;
            }
            for decoded in char::decode_utf16(units) {
                out.push(decoded.map_err(|_| "unpaired surrogate in \\X2\\ escape")?);
            }
        } else if starts_with(rest, "\\X4\\") {
            i += 4;
            loop {
                if starts_with(&chars[i..], "\\X0\\") {
                    i += 4;
                    break;
                }
                let cp = hex_at(&chars, i, 8).ok_or("malformed \\X4\\ escape")?;
                out.push(char::from_u32(cp).ok_or("invalid code point in \\X4\\ escape")?);
                i += 8;
            }
        } else if starts_with(rest, "\\X\\") {
            let byte = hex_at(&chars, i + 3, 2).ok_or("malformed \\X\\ escape")?;
            out.push(char::from_u32(byte).expect("byte is a valid code point"));
            i += 5;
        } else if starts_with(rest, "\\S\\") && i + 3 < chars.len() {
            let base = chars[i + 3] as u32;
            if !(0x20..0x7f).contains(&base) {
                return Err("malformed \\S\\ escape".into());
            }
            out.push(char::from_u32(base + 0x80).expect("latin-1 range"));
            i += 4;
        } else if rest.len() >= 4 && rest[1] == 'P' && rest[2].is_ascii_uppercase() && rest[3] == '\\' {
            // code page switch; only the default page is supported
            i += 4;
        } else {
            out.push('\\');
            i += 1;
        }
    }
    Ok(out)
}

fn starts_with(chars: &[char], pat: &str) -> bool {
    let mut it = chars.iter();
    pat.chars().all(|p| it.next() == Some(&p))
}

fn hex_at(chars: &[char], start: usize, len: usize) -> Option<u32> {
    let slice = chars.get(start..start + len)?;
    let mut v = 0u32;
    for c in slice {
        v = v * 16 + c.to_digit(16)?;
    }
    Some(v)
}

/// Encodes a string as a quoted literal. Printable ASCII is written as is;
/// runs of anything else become a single `\X2\…\X0\` group.
pub(crate) fn encode_string(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('\'');
    let mut pending: Vec<u16> = Vec::new();
    let flush = |out: &mut String, pending: &mut Vec<u16>| {
        if pending.is_empty() {
            return;
        }
        out.push_str("\\X2\\");
        for unit in pending.drain(..) {
            out.push_str(&format!("{unit:04X}"));
        }
        out.push_str("\\X0\\");
    };
    for c in s.chars() {
        if (' '..='~').contains(&c) {
            flush(&mut out, &mut pending);
            match c {
                '\'' => out.push_str("''"),
                '\\' => out.push_str("\\\\"),
                _ => out.push(c),
            }
        } else {
            let mut buf = [0u16; 2];
            pending.extend_from_slice(c.encode_utf16(&mut buf));
        }
    }
    flush(&mut out, &mut pending);
    out.push('\'');
    out
}
