//! Well-formedness of SI unit expressions such as `J/(kg·K)` or `m^3/kg`.
//!
//! ```text
//! unit    := "1" | product
//! product := factor (('·' | '*' | '/') factor)*
//! factor  := atom ('^' '-'? digits)?
//! atom    := symbol | '(' product ')'
//! ```

const SYMBOLS: &[&str] = &["kg", "mol", "cd", "Pa", "m", "s", "K", "A", "J", "W", "N"];

pub fn is_si_unit(text: &str) -> bool {
    if text == "1" {
        return true;
    }
    let mut rest = text;
    product(&mut rest) && rest.is_empty()
}

fn product(rest: &mut &str) -> bool {
    if !factor(rest) {
        return false;
    }
    loop {
        let Some(c) = rest.chars().next() else {
            return true;
        };
        if c == '·' || c == '*' || c == '/' {
            *rest = &rest[c.len_utf8()..];
            if !factor(rest) {
                return false;
            }
        } else {
            return true;
        }
    }
}

fn factor(rest: &mut &str) -> bool {
    if !atom(rest) {
        return false;
    }
    if let Some(after) = rest.strip_prefix('^') {
        let after = after.strip_prefix('-').unwrap_or(after);
        let digits = after.chars().take_while(|c| c.is_ascii_digit()).count();
        if digits == 0 {
            return false;
        }
        *rest = &after[digits..];
    }
    true
}

fn atom(rest: &mut &str) -> bool {
    if let Some(inner) = rest.strip_prefix('(') {
        *rest = inner;
        if !product(rest) {
            return false;
        }
        match rest.strip_prefix(')') {
            Some(r) => {
                *rest = r;
                true
            }
            None => false,
        }
    } else {
        let len = rest.chars().take_while(|c| c.is_ascii_alphabetic()).count();
        let word = &rest[..len];
        if SYMBOLS.contains(&word) {
            *rest = &rest[len..];
            true
        } else {
            false
        }
    }
}
