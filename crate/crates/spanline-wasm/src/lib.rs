//! Browser bindings for the demo page: extract-and-filter, compiled
//! skylines, and rule analysis on user-supplied inputs. Each entry point
//! takes plain strings and returns a JSON payload for the page to render.

use std::collections::BTreeSet;

use wasm_bindgen::prelude::*;

use spanline::domination::{dominates, DominationRule};
use spanline::error::Error;
use spanline::eval::evaluate;
use spanline::regexformula::{parse, parse_letters_inferred};
use spanline::skyline::{analyze_rule, skyline_compiled, skyline_filter};
use spanline::spancore::{Alphabet, Document, Mapping, Var};

fn err_js(e: Error) -> JsValue {
    JsValue::from_str(&e.to_string())
}

fn working_alphabet(formula_text: &str, doc_text: &str) -> Result<Alphabet, Error> {
    let discovered = parse_letters_inferred(formula_text)?;
    let mut letters: BTreeSet<char> = discovered.letters();
    letters.extend(doc_text.chars());
    Ok(Alphabet::new(letters))
}

fn load_rule(name: &str, alphabet: &Alphabet) -> Result<DominationRule, Error> {
    match name.strip_prefix("native:") {
        Some(native) => DominationRule::native(native),
        None => DominationRule::builtin(name, alphabet),
    }
}

fn mapping_json(m: &Mapping, universe: &BTreeSet<Var>) -> serde_json::Value {
    m.to_json(universe)
}

/// Evaluate a regex formula on a document and mark each extracted mapping
/// with its skyline membership and its dominators under the chosen rule.
#[wasm_bindgen]
pub fn extract(formula: &str, doc: &str, rule_name: &str) -> Result<String, JsValue> {
    extract_impl(formula, doc, rule_name).map_err(err_js)
}

fn extract_impl(formula: &str, doc: &str, rule_name: &str) -> Result<String, Error> {
    {
        let alphabet = working_alphabet(formula, doc)?;
        let compiled = parse(formula, &alphabet)?.compile(&alphabet)?;
        let d = alphabet.document(doc)?;
        let rule = load_rule(rule_name, &alphabet)?;
        let extracted = evaluate(&compiled, &d)?;
        let sky = skyline_filter(&extracted, &d, &rule)?;
        let universe = compiled.variables().clone();
        let mut rows = Vec::new();
        for m in &extracted {
            let mut dominated_by = Vec::new();
            for other in &extracted {
                if other != m && dominates(&rule, &d, m, other)? {
                    dominated_by.push(mapping_json(other, &universe));
                }
            }
            rows.push(serde_json::json!({
                "mapping": mapping_json(m, &universe),
                "in_skyline": sky.contains(m),
                "dominated_by": dominated_by,
            }));
        }
        Ok(serde_json::json!({
            "variables": universe.iter().map(|v| v.to_string()).collect::<Vec<_>>(),
            "rows": rows,
            "extracted": extracted.len(),
            "skyline": sky.len(),
            "rule": rule.name(),
            "automaton": compiled.stats(),
        })
        .to_string())
    }
}

/// Compile the skyline into the automaton and compare against the direct
/// filter on the given document.
#[wasm_bindgen]
pub fn compile_skyline(formula: &str, doc: &str, rule_name: &str) -> Result<String, JsValue> {
    compile_skyline_impl(formula, doc, rule_name).map_err(err_js)
}

fn compile_skyline_impl(formula: &str, doc: &str, rule_name: &str) -> Result<String, Error> {
    {
        let alphabet = working_alphabet(formula, doc)?;
        let input = parse(formula, &alphabet)?.compile(&alphabet)?;
        let d = alphabet.document(doc)?;
        let rule = load_rule(rule_name, &alphabet)?;
        let compiled = skyline_compiled(&input, &rule)?;
        let direct = {
            let extracted = evaluate(&input, &d)?;
            skyline_filter(&extracted, &d, &rule)?
        };
        let via_compiled = evaluate(&compiled, &d)?;
        let universe = input.variables().clone();
        Ok(serde_json::json!({
            "input_automaton": input.stats(),
            "compiled_automaton": compiled.stats(),
            "mappings": via_compiled.iter().map(|m| mapping_json(m, &universe)).collect::<Vec<_>>(),
            "agrees_with_direct": via_compiled == direct,
        })
        .to_string())
    }
}

/// Strict domination pairs and the disjointness/hitting measures of a rule
/// on a document.
#[wasm_bindgen]
pub fn analyze(rule_name: &str, doc: &str) -> Result<String, JsValue> {
    analyze_impl(rule_name, doc).map_err(err_js)
}

fn analyze_impl(rule_name: &str, doc: &str) -> Result<String, Error> {
    {
        let alphabet = Alphabet::new(doc.chars().collect::<BTreeSet<char>>());
        let d: Document = alphabet.document(doc)?;
        let rule = load_rule(rule_name, &alphabet)?;
        let analysis = analyze_rule(&rule, &d)?;
        Ok(analysis.to_json().to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extract_marks_skyline_rows() {
        let out = extract_impl("x{a}|a", "a", "varinc").unwrap();
        let json: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(json["extracted"], 2);
        assert_eq!(json["skyline"], 1);
        let rows = json["rows"].as_array().unwrap();
        assert_eq!(rows.len(), 2);
        let dominated: Vec<_> =
            rows.iter().filter(|r| r["in_skyline"] == false).collect();
        assert_eq!(dominated.len(), 1);
        assert_eq!(dominated[0]["dominated_by"].as_array().unwrap().len(), 1);
    }

    #[test]
    fn compile_skyline_reports_agreement() {
        let out = compile_skyline_impl("x{a}|a", "a", "varinc").unwrap();
        let json: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(json["agrees_with_direct"], true);
        assert_eq!(json["mappings"].as_array().unwrap().len(), 1);
    }

    #[test]
    fn analyze_reports_measures() {
        let out = analyze_impl("spaninc", "aaa").unwrap();
        let json: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(json["max_disjoint"], 3);
    }

    #[test]
    fn native_rules_work_in_extract() {
        let out = extract_impl("x{a*}ba*|a*bx{a*}", "aab", "native:spanlen").unwrap();
        let json: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(json["skyline"], 1);
    }

    #[test]
    fn errors_surface_as_strings() {
        assert!(extract_impl("x{", "a", "varinc").is_err());
        assert!(compile_skyline_impl("x{a}", "a", "spanlen").is_err());
    }
}
