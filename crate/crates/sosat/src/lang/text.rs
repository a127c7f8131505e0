//! Program text format.
//!
//! ```text
//! prog <arity> <out_count> <width> consts <word>*
//! t0 = <opcode> <operand>...
//! t1 = ...
//! ```
//!
//! Operands are written `x<i>` (input), `t<i>` (earlier result), `c<i>`
//! (constant-table entry). Words serialise as decimal; `0x`-hex is accepted
//! on input. Temps must be named in order: line i defines `t<i>`.

use super::{Instruction, LangError, Opcode, Operand, Program};

pub fn pretty_print(p: &Program) -> String {
    use std::fmt::Write;
    let mut out = String::new();
    let _ = write!(out, "prog {} {} {} consts", p.arity, p.out_count, p.width);
    for c in &p.constants {
        let _ = write!(out, " {c}");
    }
    out.push('\n');
    for (i, instr) in p.body.iter().enumerate() {
        let _ = write!(out, "t{i} = {}", instr.opcode);
        for o in &instr.operands {
            let _ = write!(out, " {o}");
        }
        out.push('\n');
    }
    out
}

fn parse_word(tok: &str, line: usize) -> Result<u64, LangError> {
    let parsed = if let Some(hex) = tok.strip_prefix("0x").or_else(|| tok.strip_prefix("0X")) {
        u64::from_str_radix(hex, 16)
    } else {
        tok.parse::<u64>()
    };
    parsed.map_err(|_| LangError::Parse { line, message: format!("bad word literal `{tok}`") })
}

fn parse_index(tok: &str, prefix: char, line: usize) -> Result<usize, LangError> {
    tok.strip_prefix(prefix)
        .and_then(|rest| rest.parse::<usize>().ok())
        .ok_or_else(|| LangError::Parse {
            line,
            message: format!("expected `{prefix}<index>`, got `{tok}`"),
        })
}

fn parse_operand(tok: &str, line: usize) -> Result<Operand, LangError> {
    match tok.chars().next() {
        Some('x') => Ok(Operand::Input(parse_index(tok, 'x', line)?)),
        Some('t') => Ok(Operand::Temp(parse_index(tok, 't', line)?)),
        Some('c') => Ok(Operand::Const(parse_index(tok, 'c', line)?)),
        _ => Err(LangError::Parse { line, message: format!("bad operand `{tok}`") }),
    }
}

/// Parse the text format. The result is guaranteed to validate.
pub fn parse_program(text: &str) -> Result<Program, LangError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(n, l)| (n + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());

    let (header_no, header) = lines
        .next()
        .ok_or(LangError::Parse { line: 1, message: "empty program text".into() })?;
    let mut toks = header.split_whitespace();
    if toks.next() != Some("prog") {
        return Err(LangError::Parse { line: header_no, message: "header must start with `prog`".into() });
    }
    let mut field = |name: &str| -> Result<u64, LangError> {
        toks.next()
            .ok_or(LangError::Parse { line: header_no, message: format!("missing {name}") })
            .and_then(|t| parse_word(t, header_no))
    };
    let arity = field("arity")? as usize;
    let out_count = field("out count")? as usize;
    let width = field("width")? as u32;
    if toks.next() != Some("consts") {
        return Err(LangError::Parse { line: header_no, message: "expected `consts`".into() });
    }
    let constants = toks
        .map(|t| parse_word(t, header_no))
        .collect::<Result<Vec<u64>, _>>()?;

    let mut body = Vec::new();
    for (line_no, line) in lines {
        let mut toks = line.split_whitespace();
        let name = toks
            .next()
            .ok_or(LangError::Parse { line: line_no, message: "empty instruction".into() })?;
        let t = parse_index(name, 't', line_no)?;
        if t != body.len() {
            return Err(LangError::Parse {
                line: line_no,
                message: format!("expected t{}, got t{t}", body.len()),
            });
        }
        if toks.next() != Some("=") {
            return Err(LangError::Parse { line: line_no, message: "expected `=`".into() });
        }
        let op_name = toks
            .next()
            .ok_or(LangError::Parse { line: line_no, message: "missing opcode".into() })?;
        let opcode = Opcode::from_name(op_name).ok_or_else(|| LangError::Parse {
            line: line_no,
            message: format!("unknown opcode `{op_name}`"),
        })?;
        let operands = toks
            .map(|t| parse_operand(t, line_no))
            .collect::<Result<Vec<Operand>, _>>()?;
        body.push(Instruction::new(opcode, operands));
    }

    let program = Program::new(arity, out_count, width, constants, body);
    program.validate()?;
    Ok(program)
}
