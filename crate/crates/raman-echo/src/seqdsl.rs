//! Text format for pulse sequences (`.qps` files).
//!
//! ```text
//! sequence  := [init] { stmt }
//! init      := "init" NUM NUM [NUM [NUM]] ";"
//! stmt      := pulse | wait | set | mark
//! pulse     := "pulse" fieldspec {"," fieldspec}
//!              ("dur" NUM unit | "area" NUM "pi") ["with" ov {"," ov}] ";"
//! fieldspec := ("probe"|"coupling"|"aux") "(" "amp=" NUM "kHz"
//!              ["," "det=" NUM "kHz"] ["," "phase=" NUM "deg"] ")"
//! wait      := "wait" NUM unit ["with" ov {"," ov}] ";"
//! set       := "set" ov ";"
//! ov        := "gamma(" INT "," INT ")=" NUM "kHz" | "freeze"
//! mark      := "mark" IDENT ";"
//! unit      := "us" | "ms"
//! ```
//!
//! Whitespace is insignificant, `#` starts a comment to end of line.
//! Level indices in `gamma(i,j)` are 1-based. The `freeze` override pins
//! the inhomogeneous shift during its segment; it is only valid inside a
//! `with` clause, not in `set`. `init` gives the initial ground/excited
//! populations and must precede all statements; omitted entries are zero
//! and an omitted `init` means all population starts in level 1.

use crate::model::{order_pair, Extent, FieldDrive, FieldId, PulseSegment, PulseSequence, Stmt};
use std::collections::BTreeMap;
use std::fmt::Write as _;

/// A `gamma(i,j)=x kHz` override: 0-based ordered level pair, rate in kHz.
type GammaOverride = ((usize, usize), f64);

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("parse error at line {line}, column {column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Num(f64),
    Sym(char),
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("'{s}'"),
            Tok::Num(x) => format!("number {x}"),
            Tok::Sym(c) => format!("'{c}'"),
            Tok::Eof => "end of input".to_string(),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
}

fn tokenize(src: &str) -> Result<Vec<Token>, ParseError> {
    let mut out = Vec::new();
    let mut line = 1usize;
    let mut column = 1usize;
    let mut chars = src.chars().peekable();
    while let Some(&c) = chars.peek() {
        let (tline, tcol) = (line, column);
        let mut bump = |chars: &mut std::iter::Peekable<std::str::Chars>| {
            let c = chars.next().unwrap();
            if c == '\n' {
                line += 1;
                column = 1;
            } else {
                column += 1;
            }
            c
        };
        if c.is_whitespace() {
            bump(&mut chars);
        } else if c == '#' {
            while let Some(&c) = chars.peek() {
                if c == '\n' {
                    break;
                }
                bump(&mut chars);
            }
        } else if c.is_ascii_alphabetic() || c == '_' {
            let mut s = String::new();
            while let Some(&c) = chars.peek() {
                if c.is_ascii_alphanumeric() || c == '_' {
                    s.push(bump(&mut chars));
                } else {
                    break;
                }
            }
            out.push(Token {
                tok: Tok::Ident(s),
                line: tline,
                column: tcol,
            });
        } else if c.is_ascii_digit() || c == '.' || c == '-' || c == '+' {
            let mut s = String::new();
            s.push(bump(&mut chars));
            while let Some(&c) = chars.peek() {
                if c.is_ascii_digit() || c == '.' {
                    s.push(bump(&mut chars));
                } else if (c == 'e' || c == 'E') && !s.contains(['e', 'E']) {
                    s.push(bump(&mut chars));
                    if let Some(&c2) = chars.peek() {
                        if c2 == '+' || c2 == '-' {
                            s.push(bump(&mut chars));
                        }
                    }
                } else {
                    break;
                }
            }
            let value: f64 = s.parse().map_err(|_| ParseError {
                line: tline,
                column: tcol,
                message: format!("malformed number '{s}'"),
            })?;
            out.push(Token {
                tok: Tok::Num(value),
                line: tline,
                column: tcol,
            });
        } else if matches!(c, '(' | ')' | ',' | ';' | '=') {
            bump(&mut chars);
            out.push(Token {
                tok: Tok::Sym(c),
                line: tline,
                column: tcol,
            });
        } else {
            return Err(ParseError {
                line: tline,
                column: tcol,
                message: format!("unexpected character '{c}'"),
            });
        }
    }
    out.push(Token {
        tok: Tok::Eof,
        line,
        column,
    });
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos.min(self.tokens.len() - 1)]
    }

    fn next(&mut self) -> Token {
        let t = self.peek().clone();
        if self.pos < self.tokens.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn error(&self, token: &Token, message: impl Into<String>) -> ParseError {
        ParseError {
            line: token.line,
            column: token.column,
            message: message.into(),
        }
    }

    fn expect_sym(&mut self, c: char) -> Result<(), ParseError> {
        let t = self.next();
        if t.tok == Tok::Sym(c) {
            Ok(())
        } else {
            Err(self.error(&t, format!("expected '{c}', found {}", t.tok.describe())))
        }
    }

    fn expect_ident(&mut self, word: &str) -> Result<(), ParseError> {
        let t = self.next();
        if t.tok == Tok::Ident(word.to_string()) {
            Ok(())
        } else {
            Err(self.error(&t, format!("expected '{word}', found {}", t.tok.describe())))
        }
    }

    fn expect_num(&mut self, what: &str) -> Result<f64, ParseError> {
        let t = self.next();
        if let Tok::Num(x) = t.tok {
            Ok(x)
        } else {
            Err(self.error(&t, format!("expected {what}, found {}", t.tok.describe())))
        }
    }

    fn peek_ident(&self, word: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(s) if s == word)
    }

    fn duration_us(&mut self, what: &str) -> Result<f64, ParseError> {
        let value = self.expect_num(what)?;
        let t = self.next();
        match &t.tok {
            Tok::Ident(u) if u == "us" => Ok(value),
            Tok::Ident(u) if u == "ms" => Ok(value * 1000.0),
            other => Err(self.error(
                &t,
                format!("expected time unit 'us' or 'ms', found {}", other.describe()),
            )),
        }
    }

    fn level_index(&mut self) -> Result<usize, ParseError> {
        let t = self.next();
        let x = match t.tok {
            Tok::Num(x) => x,
            ref other => {
                return Err(self.error(&t, format!("expected level index, found {}", other.describe())))
            }
        };
        if x.fract() != 0.0 || !(1.0..=4.0).contains(&x) {
            return Err(self.error(&t, format!("level index must be an integer in 1..=4, got {x}")));
        }
        Ok(x as usize - 1)
    }

    /// One entry of a `with` clause. `allow_freeze` is false inside `set`.
    fn override_entry(
        &mut self,
        allow_freeze: bool,
    ) -> Result<Option<GammaOverride>, ParseError> {
        let t = self.next();
        match &t.tok {
            Tok::Ident(s) if s == "freeze" => {
                if allow_freeze {
                    Ok(None)
                } else {
                    Err(self.error(&t, "'freeze' is only valid in a 'with' clause"))
                }
            }
            Tok::Ident(s) if s == "gamma" => {
                self.expect_sym('(')?;
                let i = self.level_index()?;
                self.expect_sym(',')?;
                let j = self.level_index()?;
                if i == j {
                    return Err(self.error(&t, "gamma override needs two distinct levels"));
                }
                self.expect_sym(')')?;
                self.expect_sym('=')?;
                let value = self.expect_num("decay rate")?;
                self.expect_ident("kHz")?;
                Ok(Some((order_pair((i, j)), value)))
            }
            other => Err(self.error(
                &t,
                format!("expected 'gamma(i,j)=...kHz' or 'freeze', found {}", other.describe()),
            )),
        }
    }

    fn with_clause(&mut self) -> Result<(Vec<GammaOverride>, bool), ParseError> {
        let mut overrides = Vec::new();
        let mut freeze = false;
        if self.peek_ident("with") {
            self.next();
            loop {
                match self.override_entry(true)? {
                    Some(entry) => {
                        if overrides.iter().any(|(p, _)| *p == entry.0) {
                            let t = self.peek().clone();
                            return Err(self.error(&t, "duplicate gamma override in clause"));
                        }
                        overrides.push(entry);
                    }
                    None => freeze = true,
                }
                if self.peek().tok == Tok::Sym(',') {
                    self.next();
                } else {
                    break;
                }
            }
        }
        overrides.sort_by_key(|(p, _)| *p);
        Ok((overrides, freeze))
    }

    fn fieldspec(&mut self) -> Result<(FieldId, FieldDrive), ParseError> {
        let t = self.next();
        let field = match &t.tok {
            Tok::Ident(s) => FieldId::from_name(s).ok_or_else(|| {
                self.error(&t, format!("expected field 'probe', 'coupling' or 'aux', found '{s}'"))
            })?,
            other => {
                return Err(self.error(
                    &t,
                    format!("expected field 'probe', 'coupling' or 'aux', found {}", other.describe()),
                ))
            }
        };
        self.expect_sym('(')?;
        let amp_tok = self.peek().clone();
        if !self.peek_ident("amp") {
            return Err(self.error(
                &amp_tok,
                format!("expected 'amp=' in field spec, found {}", amp_tok.tok.describe()),
            ));
        }
        self.next();
        self.expect_sym('=')?;
        let amp_khz = self.expect_num("amplitude")?;
        self.expect_ident("kHz")?;
        let mut det_khz = 0.0;
        let mut phase_rad = 0.0;
        let mut seen_det = false;
        let mut seen_phase = false;
        while self.peek().tok == Tok::Sym(',') {
            self.next();
            let key = self.next();
            match &key.tok {
                Tok::Ident(s) if s == "det" && !seen_det && !seen_phase => {
                    self.expect_sym('=')?;
                    det_khz = self.expect_num("detuning")?;
                    self.expect_ident("kHz")?;
                    seen_det = true;
                }
                Tok::Ident(s) if s == "phase" && !seen_phase => {
                    self.expect_sym('=')?;
                    phase_rad = self.expect_num("phase")?.to_radians();
                    self.expect_ident("deg")?;
                    seen_phase = true;
                }
                other => {
                    return Err(self.error(
                        &key,
                        format!("expected 'det=' or 'phase=', found {}", other.describe()),
                    ))
                }
            }
        }
        self.expect_sym(')')?;
        Ok((
            field,
            FieldDrive {
                amp_khz,
                det_khz,
                phase_rad,
            },
        ))
    }

    fn pulse(&mut self) -> Result<Stmt, ParseError> {
        let mut fields = BTreeMap::new();
        loop {
            let at = self.peek().clone();
            let (id, drive) = self.fieldspec()?;
            if fields.insert(id, drive).is_some() {
                return Err(self.error(&at, format!("field '{id}' given twice in one pulse")));
            }
            if self.peek().tok == Tok::Sym(',') {
                self.next();
            } else {
                break;
            }
        }
        let t = self.next();
        let extent = match &t.tok {
            Tok::Ident(s) if s == "dur" => Extent::DurationUs(self.duration_us("duration")?),
            Tok::Ident(s) if s == "area" => {
                let n = self.expect_num("pulse area")?;
                self.expect_ident("pi")?;
                Extent::AreaRad(n * std::f64::consts::PI)
            }
            other => {
                return Err(self.error(
                    &t,
                    format!("expected 'dur' or 'area', found {}", other.describe()),
                ))
            }
        };
        let (gamma_overrides, freeze_shift) = self.with_clause()?;
        Ok(Stmt::Pulse(PulseSegment {
            fields,
            extent,
            gamma_overrides,
            freeze_shift,
        }))
    }

    fn statement(&mut self) -> Result<Stmt, ParseError> {
        let t = self.next();
        let stmt = match &t.tok {
            Tok::Ident(s) if s == "pulse" => self.pulse()?,
            Tok::Ident(s) if s == "wait" => {
                let dur_us = self.duration_us("wait duration")?;
                let (gamma_overrides, freeze_shift) = self.with_clause()?;
                Stmt::Wait {
                    dur_us,
                    gamma_overrides,
                    freeze_shift,
                }
            }
            Tok::Ident(s) if s == "set" => match self.override_entry(false)? {
                Some((pair, value_khz)) => Stmt::Set { pair, value_khz },
                None => unreachable!("freeze rejected above"),
            },
            Tok::Ident(s) if s == "mark" => {
                let name = self.next();
                match &name.tok {
                    Tok::Ident(id) => Stmt::Mark(id.clone()),
                    other => {
                        return Err(self.error(
                            &name,
                            format!("expected marker name, found {}", other.describe()),
                        ))
                    }
                }
            }
            Tok::Ident(s) if s == "init" => {
                return Err(self.error(&t, "'init' must precede all statements"));
            }
            other => {
                return Err(self.error(
                    &t,
                    format!(
                        "expected 'pulse', 'wait', 'set' or 'mark', found {}",
                        other.describe()
                    ),
                ))
            }
        };
        self.expect_sym(';')?;
        Ok(stmt)
    }
}

pub fn parse(src: &str) -> Result<PulseSequence, ParseError> {
    let tokens = tokenize(src)?;
    let mut p = Parser { tokens, pos: 0 };
    let mut seq = PulseSequence::default();
    if p.peek_ident("init") {
        p.next();
        let mut pops = [0.0; 4];
        pops[0] = p.expect_num("population")?;
        pops[1] = p.expect_num("population")?;
        for slot in pops.iter_mut().skip(2) {
            if let Tok::Num(x) = p.peek().tok {
                p.next();
                *slot = x;
            } else {
                break;
            }
        }
        p.expect_sym(';')?;
        seq.initial_populations = pops;
    }
    while p.peek().tok != Tok::Eof {
        seq.stmts.push(p.statement()?);
    }
    Ok(seq)
}

/// Shortest decimal `g` with `f(g)` exactly equal to `target`, searched
/// around the naive inverse so parse(format(x)) reproduces x bitwise.
fn exact_preimage(guess: f64, target: f64, f: impl Fn(f64) -> f64) -> f64 {
    if f(guess) == target {
        return guess;
    }
    let mut up = guess;
    let mut down = guess;
    for _ in 0..4 {
        up = up.next_up();
        down = down.next_down();
        if f(up) == target {
            return up;
        }
        if f(down) == target {
            return down;
        }
    }
    guess
}

fn fmt_overrides(out: &mut String, overrides: &[((usize, usize), f64)], freeze: bool) {
    if overrides.is_empty() && !freeze {
        return;
    }
    out.push_str(" with ");
    let mut parts: Vec<String> = overrides
        .iter()
        .map(|((i, j), v)| format!("gamma({},{})={}kHz", i + 1, j + 1, v))
        .collect();
    if freeze {
        parts.push("freeze".to_string());
    }
    out.push_str(&parts.join(", "));
}

fn fmt_drive(out: &mut String, id: FieldId, drive: &FieldDrive) {
    write!(out, "{id}(amp={}kHz", drive.amp_khz).unwrap();
    if drive.det_khz != 0.0 {
        write!(out, ", det={}kHz", drive.det_khz).unwrap();
    }
    if drive.phase_rad != 0.0 {
        let deg = exact_preimage(drive.phase_rad.to_degrees(), drive.phase_rad, |d| {
            d.to_radians()
        });
        write!(out, ", phase={deg}deg").unwrap();
    }
    out.push(')');
}

/// Canonical text form. Parsing the output reproduces the sequence
/// structurally, and formatting is byte-stable under reparse.
pub fn format(seq: &PulseSequence) -> String {
    let mut out = String::from("# raman-echo pulse sequence\n");
    let default_init = seq.initial_populations == [1.0, 0.0, 0.0, 0.0];
    if !(seq.stmts.is_empty() && default_init) {
        let p = seq.initial_populations;
        writeln!(out, "init {} {} {} {};", p[0], p[1], p[2], p[3]).unwrap();
    }
    for stmt in &seq.stmts {
        match stmt {
            Stmt::Pulse(seg) => {
                out.push_str("pulse ");
                let mut first = true;
                for (id, drive) in &seg.fields {
                    if !first {
                        out.push_str(", ");
                    }
                    first = false;
                    fmt_drive(&mut out, *id, drive);
                }
                match seg.extent {
                    Extent::DurationUs(d) => write!(out, " dur {d} us").unwrap(),
                    Extent::AreaRad(a) => {
                        let pis = exact_preimage(a / std::f64::consts::PI, a, |p| {
                            p * std::f64::consts::PI
                        });
                        write!(out, " area {pis} pi").unwrap();
                    }
                }
                fmt_overrides(&mut out, &seg.gamma_overrides, seg.freeze_shift);
                out.push_str(";\n");
            }
            Stmt::Wait {
                dur_us,
                gamma_overrides,
                freeze_shift,
            } => {
                write!(out, "wait {dur_us} us").unwrap();
                fmt_overrides(&mut out, gamma_overrides, *freeze_shift);
                out.push_str(";\n");
            }
            Stmt::Set { pair, value_khz } => {
                writeln!(out, "set gamma({},{})={}kHz;", pair.0 + 1, pair.1 + 1, value_khz)
                    .unwrap();
            }
            Stmt::Mark(name) => writeln!(out, "mark {name};").unwrap(),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{pulse_area, resolve_durations};
    use approx::assert_relative_eq;

    const EXAMPLE: &str = "init 0.5 0.5; \
        pulse probe(amp=17kHz), coupling(amp=17kHz) dur 3 us; \
        wait 4 us; \
        pulse probe(amp=35.355kHz), coupling(amp=35.355kHz) area 2 pi; \
        mark R_end;";

    #[test]
    fn example_parses_to_four_statements() {
        let seq = parse(EXAMPLE).unwrap();
        assert_eq!(seq.initial_populations, [0.5, 0.5, 0.0, 0.0]);
        assert_eq!(seq.stmts.len(), 4);
        let resolved = resolve_durations(&seq).unwrap();
        match &resolved.stmts[2] {
            Stmt::Pulse(seg) => match seg.extent {
                Extent::DurationUs(d) => assert_relative_eq!(d, 20.0, max_relative = 1e-4),
                Extent::AreaRad(_) => panic!("duration not resolved"),
            },
            other => panic!("expected rephasing pulse, got {other:?}"),
        }
        assert!(matches!(&resolved.stmts[3], Stmt::Mark(n) if n == "R_end"));
    }

    #[test]
    fn empty_source_gives_default_sequence() {
        for src in ["", "   \n\t", "# just a comment\n# another\n"] {
            let seq = parse(src).unwrap();
            assert_eq!(seq.initial_populations, [1.0, 0.0, 0.0, 0.0]);
            assert!(seq.stmts.is_empty());
        }
    }

    #[test]
    fn missing_amp_is_a_parse_error_at_the_paren() {
        let err = parse("pulse probe() dur 3 us;").unwrap_err();
        assert!(err.message.contains("amp"), "message: {}", err.message);
        assert_eq!(err.line, 1);
        assert_eq!(err.column, 13);
    }

    #[test]
    fn set_freeze_is_rejected() {
        let err = parse("set freeze;").unwrap_err();
        assert!(err.message.contains("freeze"));
    }

    #[test]
    fn init_after_statements_is_rejected() {
        let err = parse("wait 1 us; init 1 0;").unwrap_err();
        assert!(err.message.contains("init"));
    }

    #[test]
    fn bad_level_indices_are_rejected() {
        assert!(parse("set gamma(5,1)=0kHz;").is_err());
        assert!(parse("set gamma(2,2)=0kHz;").is_err());
        assert!(parse("set gamma(1.5,1)=0kHz;").is_err());
    }

    #[test]
    fn milliseconds_convert_to_microseconds() {
        let seq = parse("wait 1.5 ms;").unwrap();
        match &seq.stmts[0] {
            Stmt::Wait { dur_us, .. } => assert_eq!(*dur_us, 1500.0),
            other => panic!("{other:?}"),
        }
        assert!(format(&seq).contains("wait 1500 us;"));
    }

    #[test]
    fn freeze_and_gamma_round_trip_on_wait() {
        let src = "wait 1010 us with gamma(2,1)=0kHz, freeze;";
        let seq = parse(src).unwrap();
        match &seq.stmts[0] {
            Stmt::Wait {
                gamma_overrides,
                freeze_shift,
                ..
            } => {
                assert_eq!(gamma_overrides, &vec![((1, 0), 0.0)]);
                assert!(freeze_shift);
            }
            other => panic!("{other:?}"),
        }
        let text = format(&seq);
        assert!(text.contains("with gamma(2,1)=0kHz, freeze;"), "{text}");
    }

    #[test]
    fn negative_detuning_and_phase_parse() {
        let seq = parse("pulse probe(amp=25kHz, det=-80kHz, phase=90deg) dur 1 us;").unwrap();
        match &seq.stmts[0] {
            Stmt::Pulse(seg) => {
                let drive = &seg.fields[&FieldId::Probe];
                assert_eq!(drive.det_khz, -80.0);
                assert_relative_eq!(drive.phase_rad, std::f64::consts::FRAC_PI_2);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn format_of_empty_sequence_is_a_header_comment() {
        let text = format(&PulseSequence::default());
        assert_eq!(text, "# raman-echo pulse sequence\n");
        assert_eq!(parse(&text).unwrap(), PulseSequence::default());
    }

    #[test]
    fn parse_format_identity_on_the_example() {
        let seq = parse(EXAMPLE).unwrap();
        let text = format(&seq);
        let reparsed = parse(&text).unwrap();
        assert_eq!(reparsed, seq);
        assert_eq!(format(&reparsed), text, "formatting is byte-stable");
    }

    #[test]
    fn duplicate_field_in_pulse_is_rejected() {
        let err = parse("pulse probe(amp=1kHz), probe(amp=2kHz) dur 1 us;").unwrap_err();
        assert!(err.message.contains("twice"));
    }

    #[test]
    fn area_statement_matches_direct_area() {
        let seq = parse("pulse probe(amp=50kHz) area 1 pi;").unwrap();
        match &seq.stmts[0] {
            Stmt::Pulse(seg) => {
                assert_relative_eq!(pulse_area(seg).unwrap(), std::f64::consts::PI)
            }
            other => panic!("{other:?}"),
        }
    }

    #[cfg(test)]
    mod round_trip {
        use super::*;
        use proptest::prelude::*;

        fn nice_num() -> impl Strategy<Value = f64> {
            (1i64..40000).prop_map(|n| n as f64 / 8.0)
        }

        fn arb_drive() -> impl Strategy<Value = FieldDrive> {
            (nice_num(), prop_oneof![Just(0.0), nice_num()], 0i32..360)
                .prop_map(|(amp, det, deg)| FieldDrive {
                    amp_khz: amp,
                    det_khz: det,
                    phase_rad: (deg as f64).to_radians(),
                })
        }

        fn arb_stmt() -> impl Strategy<Value = Stmt> {
            prop_oneof![
                (arb_drive(), nice_num()).prop_map(|(d, dur)| {
                    let mut fields = BTreeMap::new();
                    fields.insert(FieldId::Probe, d);
                    Stmt::Pulse(PulseSegment {
                        fields,
                        extent: Extent::DurationUs(dur),
                        gamma_overrides: vec![],
                        freeze_shift: false,
                    })
                }),
                (arb_drive(), 1u32..8).prop_map(|(d, n)| {
                    let mut fields = BTreeMap::new();
                    fields.insert(FieldId::Coupling, d);
                    Stmt::Pulse(PulseSegment {
                        fields,
                        extent: Extent::AreaRad(n as f64 * std::f64::consts::PI),
                        gamma_overrides: vec![],
                        freeze_shift: true,
                    })
                }),
                (nice_num(), prop::bool::ANY).prop_map(|(dur, freeze)| Stmt::Wait {
                    dur_us: dur,
                    gamma_overrides: vec![((1, 0), 0.0)],
                    freeze_shift: freeze,
                }),
                nice_num().prop_map(|v| Stmt::Set {
                    pair: (2, 0),
                    value_khz: v,
                }),
                "[a-z][a-z0-9_]{0,8}".prop_map(Stmt::Mark),
            ]
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]
            #[test]
            fn round_trip_is_structural_identity(stmts in prop::collection::vec(arb_stmt(), 0..6)) {
                let seq = PulseSequence {
                    initial_populations: [0.25, 0.75, 0.0, 0.0],
                    stmts,
                };
                let text = format(&seq);
                let reparsed = parse(&text).unwrap();
                prop_assert_eq!(&reparsed, &seq);
                prop_assert_eq!(format(&reparsed), text);
            }
        }
    }
}
