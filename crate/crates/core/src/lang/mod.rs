//! MiniImp frontend: lexer, reshaping, parser, and control-flow graphs.

pub mod ast;
pub mod cfg;
pub mod lexer;
pub mod parser;

pub use ast::{
    ret_slot_name, BinOp, Expr, Function, IdentDecl, LValue, MiniImpProgram, Param, Stmt, Ty, UnOp,
};
pub use cfg::{build_cfg, CfgBuilder, CfgEdge, CfgFunction, Effect, InternalCfg, NodeId, EdgeId};
pub use lexer::{reshape, tokenize, LexError, Token, TokenKind};
pub use parser::{parse, ParseError};

/// Convenience: full pipeline from source text to a detailed CFG.
pub fn cfg_of_source(source: &str) -> Result<InternalCfg, String> {
    let toks = tokenize(source).map_err(|e| e.to_string())?;
    let prog = parse(&toks).map_err(|e| e.to_string())?;
    cfg::build_cfg(&prog).map_err(|e| e.to_string())
}

/// Full pipeline keeping the program around.
pub fn frontend(source: &str) -> Result<(MiniImpProgram, InternalCfg), String> {
    let toks = tokenize(source).map_err(|e| e.to_string())?;
    let prog = parse(&toks).map_err(|e| e.to_string())?;
    let cfg = cfg::build_cfg(&prog).map_err(|e| e.to_string())?;
    Ok((prog, cfg))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reparse_of_reshaped_source_is_structurally_equal() {
        let src = "int f(int a){ if (a > 0) { return a; } return 0 - a; } \
                   void main(){ int x = input(); int y; y = f(x); }";
        let t1 = tokenize(src).unwrap();
        let p1 = parse(&t1).unwrap();
        let reshaped = reshape(&t1);
        let t2 = tokenize(&reshaped).unwrap();
        let p2 = parse(&t2).unwrap();
        assert_eq!(p1, p2);
    }
}
