//! Reference transductions, written straight from what each corpus program
//! is meant to compute. None of them touches the interpreter.

/// A named string function together with the alphabet it is checked over.
#[derive(Clone, Copy)]
pub struct Oracle {
    pub name: &'static str,
    pub sigma: &'static str,
    pub f: fn(&str) -> String,
}

impl Oracle {
    pub fn apply(&self, w: &str) -> String {
        (self.f)(w)
    }

    pub fn sigma(&self) -> Vec<char> {
        self.sigma.chars().collect()
    }
}

fn identity(w: &str) -> String {
    w.to_string()
}

/// Add one to a binary numeral, most significant bit first, keeping the width.
pub fn increment(w: &str) -> String {
    let mut bits: Vec<char> = w.chars().collect();
    for b in bits.iter_mut().rev() {
        if *b == '1' {
            *b = '0';
        } else {
            *b = '1';
            break;
        }
    }
    bits.into_iter().collect()
}

pub fn rotate_right(w: &str) -> String {
    let mut cs: Vec<char> = w.chars().collect();
    if !cs.is_empty() {
        cs.rotate_right(1);
    }
    cs.into_iter().collect()
}

/// Replace each letter by its image; letters without an image vanish.
pub fn homomorphism(w: &str, image: &[(char, &str)]) -> String {
    w.chars()
        .map(|c| image.iter().find(|(a, _)| *a == c).map_or("", |(_, s)| *s))
        .collect()
}

fn hom_packed(w: &str) -> String {
    homomorphism(w, &[('a', "aa"), ('b', "ccb")])
}

fn hom_srasp(w: &str) -> String {
    homomorphism(w, &[('A', "aa"), ('B', ""), ('C', "ccd")])
}

fn letters_to_digits(w: &str) -> String {
    homomorphism(w, &[('a', "1"), ('c', "2"), ('d', "0")])
}

pub fn map_reverse(w: &str) -> String {
    w.split('|').map(|b| b.chars().rev().collect::<String>()).collect::<Vec<_>>().join("|")
}

pub fn map_duplicate(w: &str) -> String {
    w.split('|').map(|b| b.repeat(2)).collect::<Vec<_>>().join("|")
}

fn copy_first_half(w: &str) -> String {
    let n = w.chars().count();
    w.chars().take(n / 2).collect()
}

fn residues(w: &str, m: usize) -> String {
    (0..w.chars().count()).map(|i| char::from_digit((i % m) as u32, 10).unwrap()).collect()
}

/// A bar, then copy k of w for k = 1..=|w| with its first k letters
/// capitalized, each followed by a bar.
pub fn marked_square(w: &str) -> String {
    let mut s = String::from("|");
    let n = w.chars().count();
    for k in 1..=n {
        for (i, c) in w.chars().enumerate() {
            s.push(if i < k { c.to_ascii_uppercase() } else { c });
        }
        s.push('|');
    }
    s
}

/// Every position becomes the more frequent of a and b; a wins ties.
pub fn majority(w: &str) -> String {
    let a = w.chars().filter(|&c| c == 'a').count();
    let b = w.chars().filter(|&c| c == 'b').count();
    let m = if a >= b { 'a' } else { 'b' };
    w.chars().map(|_| m).collect()
}

/// Running sum of the digits read so far, mod 3.
fn count_mod_3(w: &str) -> String {
    let mut acc = 0;
    w.chars()
        .map(|c| {
            acc = (acc + c.to_digit(10).unwrap()) % 3;
            char::from_digit(acc, 10).unwrap()
        })
        .collect()
}

pub const ORACLES: &[Oracle] = &[
    Oracle { name: "identity", sigma: "abc", f: identity },
    Oracle { name: "identity-srasp", sigma: "abc", f: identity },
    Oracle { name: "identity-packer", sigma: "abcdefg|", f: identity },
    Oracle { name: "increment", sigma: "01", f: increment },
    Oracle { name: "rotate-right", sigma: "abc", f: rotate_right },
    Oracle { name: "hom-packed", sigma: "ab", f: hom_packed },
    Oracle { name: "hom-srasp", sigma: "ABC", f: hom_srasp },
    Oracle { name: "letters-to-digits", sigma: "acd", f: letters_to_digits },
    Oracle { name: "map-reverse", sigma: "abcdefg|", f: map_reverse },
    Oracle { name: "map-duplicate", sigma: "abcde|", f: map_duplicate },
    Oracle { name: "copy-first-half", sigma: "abc", f: copy_first_half },
    Oracle { name: "residues-2", sigma: "ab", f: |w| residues(w, 2) },
    Oracle { name: "residues-3", sigma: "ab", f: |w| residues(w, 3) },
    Oracle { name: "residues-5", sigma: "ab", f: |w| residues(w, 5) },
    Oracle { name: "marked-square", sigma: "ab", f: marked_square },
    Oracle { name: "majority-rules", sigma: "ab", f: majority },
    Oracle { name: "majority-wide", sigma: "abAB|", f: majority },
    Oracle { name: "count-mod-3", sigma: "012", f: count_mod_3 },
];

pub fn oracle(name: &str) -> Option<&'static Oracle> {
    ORACLES.iter().find(|o| o.name == name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_examples() {
        assert_eq!(increment("01011"), "01100");
        assert_eq!(increment("111"), "000");
        assert_eq!(rotate_right("abcbbac"), "cabcbba");
        assert_eq!(map_reverse("|ab|cde|fg|"), "|ba|edc|gf|");
        assert_eq!(map_duplicate("|ab|cde|"), "|abab|cdecde|");
        assert_eq!(copy_first_half("abcaabcbb"), "abca");
        assert_eq!(hom_srasp("ABBC"), "aaccd");
        assert_eq!(marked_square("aab"), "|Aab|AAb|AAB|");
        assert_eq!(marked_square(""), "|");
        assert_eq!(majority("bbabbaba"), "bbbbbbbb");
        assert_eq!(majority("ab"), "aa");
        assert_eq!(count_mod_3("1212"), "1010");
        assert_eq!(residues("aaaaaaaa", 3), "01201201");
    }

    #[test]
    fn empty_input() {
        for o in ORACLES {
            assert_eq!(o.apply(""), if o.name == "marked-square" { "|" } else { "" }, "{}", o.name);
        }
    }
}
