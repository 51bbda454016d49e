use earthwire::dsl::{self, Keyword};
use earthwire::model::DEFAULT_CFL;

const BURIED_VERBATIM: &str = include_str!("fixtures/buried_wire_verbatim.txt");
const ARRAY_VERBATIM: &str = include_str!("fixtures/array_verbatim.txt");
const BURIED: &str = include_str!("../../../models/buried_wire_gpr.txt");
const ARRAY: &str = include_str!("../../../models/array_three_layer.txt");

#[test]
fn measured_current_placeholder_is_the_only_syntax_error() {
    let (cmds, diags) = dsl::parse(BURIED_VERBATIM);
    assert_eq!(cmds.len(), 15);
    assert_eq!(diags.len(), 1);
    assert_eq!(diags[0].line, 16);
}

#[test]
fn shipped_buried_wire_model_validates() {
    let (cmds, diags) = dsl::parse(BURIED);
    assert!(diags.is_empty(), "{diags:?}");
    assert_eq!(cmds.len(), 16);
    let m = dsl::validate(&cmds).unwrap();
    assert_eq!(m.cells(), Some([80, 40, 56]));
    assert_eq!(m.probe_name(0), "current0");
    assert_eq!(m.probe_name(1), "voltage0");
}

#[test]
fn array_listing_parses_but_its_heidler_line_is_rejected() {
    let (cmds, diags) = dsl::parse(ARRAY_VERBATIM);
    assert!(diags.is_empty(), "{diags:?}");
    assert_eq!(cmds.len(), 22);
    let errs = dsl::validate(&cmds).unwrap_err();
    assert!(errs.iter().all(|d| d.line == 22), "{errs:?}");
    let m = dsl::load(ARRAY).unwrap();
    assert_eq!(m.cells(), Some([100, 100, 80]));
}

#[test]
fn arity_error_names_the_keyword() {
    let (cmds, diags) = dsl::parse("volume (10, 5)\n");
    assert!(cmds.is_empty());
    assert_eq!(diags.len(), 1);
    assert_eq!(diags[0].line, 1);
    assert!(diags[0].message.contains("volume"), "{}", diags[0].message);
}

#[test]
fn undefined_medium_is_reported_on_the_block_line() {
    let text = BURIED.replace("16.381, 0.002684, deb)", "16.381, 0.002684, deb9)");
    let errs = dsl::load(&text).unwrap_err();
    let block_line = text.lines().position(|l| l.starts_with("block")).unwrap() + 1;
    assert!(errs.iter().any(|d| d.line == block_line && d.message.contains("deb9")), "{errs:?}");
}

#[test]
fn duplicate_singleton_gives_one_error() {
    let text = format!("{BURIED}volume (10, 5, 7, 0.125)\n");
    let errs = dsl::load(&text).unwrap_err();
    assert_eq!(errs.len(), 1, "{errs:?}");
    assert!(errs[0].message.contains("duplicate volume"));
}

#[test]
fn names_may_be_used_before_definition() {
    // Move the waveform and medium definitions to the top of the body.
    let mut lines: Vec<&str> = BURIED.lines().collect();
    let f = lines.iter().position(|l| l.starts_with("function")).unwrap();
    let func = lines.remove(f);
    let d = lines.iter().position(|l| l.starts_with("debye")).unwrap();
    let deb = lines.remove(d);
    lines.push(deb);
    lines.insert(4, func);
    assert!(dsl::load(&lines.join("\n")).is_ok());
}

#[test]
fn all_errors_are_reported_in_one_pass() {
    let text = BURIED
        .replace("wire (thin, 2.5, 2.5, 3.75", "wire (thick, 2.5, 2.5, 3.75")
        .replace("source (current", "source (magnetic")
        .replace("calctime (15e-6)", "calctime (fifteen)");
    let errs = dsl::load(&text).unwrap_err();
    assert!(errs.len() >= 3, "{errs:?}");
    assert!(errs.windows(2).all(|w| w[0].line <= w[1].line));
}

#[test]
fn syntax_errors_carry_columns() {
    let (_, diags) = dsl::parse("calctime (1e-6)\nblock (0, 0, 0, 1, 1, 1, 4, 0.01, 3x)\nfoo (1)\n");
    assert_eq!(diags.len(), 2);
    assert_eq!((diags[0].line, diags[0].col), (2, 35));
    assert_eq!(diags[1].line, 3);
    assert!(diags[1].to_string().starts_with("3:1: unknown keyword"));
}

#[test]
fn comments_blank_lines_and_crlf_are_ignored() {
    let text = "# header\r\n\r\ncalctime (1e-6) # trailing\r\n";
    let (cmds, diags) = dsl::parse(text);
    assert!(diags.is_empty());
    assert_eq!(cmds.len(), 1);
    assert_eq!(cmds[0].keyword, Keyword::Calctime);
    assert_eq!(cmds[0].line, 3);
}

#[test]
fn empty_file_is_invalid() {
    let errs = dsl::load("").unwrap_err();
    assert_eq!(errs.len(), 4);
}

#[test]
fn print_and_load_round_trip() {
    for text in [BURIED, ARRAY] {
        let m = dsl::load(text).unwrap();
        assert_eq!(m.cfl, DEFAULT_CFL);
        let printed = dsl::print(&m).unwrap();
        assert_eq!(dsl::load(&printed).unwrap(), m);
    }
}
