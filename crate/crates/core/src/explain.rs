//! Human-readable fuzzy rules, per-node firing explanations and learned
//! threshold tables.

use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{rule_activation, FuzzyParams};
use crate::numkit::DenseMatrix;
use crate::topo::FactMatrix;
use crate::train::CvResult;

pub const RULE_NAMES: [&str; 3] = ["high_connectivity", "high_cliquishness", "high_label_consistency"];
pub const RULE_FEATURES: [&str; 3] = ["degree", "clustering", "2-hop label agreement"];
const COLUMN_TITLES: [&str; 3] = ["θ1 (Degree)", "θ2 (Clustering)", "θ3 (Label Agreement)"];

/// One learned rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rule {
    pub index: usize,
    pub name: String,
    pub feature: String,
    pub theta: f64,
    pub alpha: f64,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Rule {}: IF {} ≥ {:.2} THEN {}", self.index, self.feature, self.theta, self.name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleReport {
    pub rules: Vec<Rule>,
}

impl RuleReport {
    /// One `Rule i: IF <feature> ≥ <θ> THEN <name>` line per rule.
    pub fn text(&self) -> String {
        self.rules.iter().map(|r| format!("{r}\n")).collect()
    }

    pub fn json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data")
    }
}

pub fn render_rules(params: &FuzzyParams<f64>) -> RuleReport {
    let rules = (0..3)
        .map(|i| Rule {
            index: i + 1,
            name: RULE_NAMES[i].into(),
            feature: RULE_FEATURES[i].into(),
            theta: params.theta.data()[i],
            alpha: params.alpha.data()[i],
        })
        .collect();
    RuleReport { rules }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Activated,
    Marginal,
    NotActivated,
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Activation::Activated => "activated",
            Activation::Marginal => "marginally activated",
            Activation::NotActivated => "not activated",
        })
    }
}

/// Strengths strictly above `high` are activated, strictly below `low`
/// not activated, and marginal in between (inclusive).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TagBands {
    pub low: f64,
    pub high: f64,
}

impl Default for TagBands {
    fn default() -> Self {
        Self { low: 0.45, high: 0.55 }
    }
}

impl TagBands {
    pub fn tag(&self, strength: f64) -> Activation {
        if strength > self.high {
            Activation::Activated
        } else if strength < self.low {
            Activation::NotActivated
        } else {
            Activation::Marginal
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleFiring {
    pub rule: usize,
    pub name: String,
    pub feature: String,
    pub value: f64,
    pub theta: f64,
    pub strength: f64,
    pub tag: Activation,
}

impl fmt::Display for RuleFiring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cmp = if self.value >= self.theta { "≥" } else { "<" };
        write!(
            f,
            "{} = {:.2} {cmp} θ{} = {:.2} ⇒ Rule {} {} (strength = {:.2})",
            self.feature, self.value, self.rule, self.theta, self.rule, self.tag, self.strength
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeExplanation {
    pub node: usize,
    pub facts: [f64; 3],
    pub strengths: [f64; 3],
    pub firings: Vec<RuleFiring>,
    pub prediction: Option<usize>,
}

impl NodeExplanation {
    pub fn text(&self) -> String {
        let mut s = match self.prediction {
            Some(c) => format!("Node {} (predicted class {c}):\n", self.node),
            None => format!("Node {}:\n", self.node),
        };
        for f in &self.firings {
            let _ = writeln!(s, "  {f}");
        }
        s
    }

    pub fn json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data")
    }
}

pub fn explain_node(u: usize, facts: &FactMatrix, params: &FuzzyParams<f64>, prediction: Option<usize>) -> Result<NodeExplanation> {
    explain_node_with(u, facts, params, prediction, TagBands::default())
}

/// As [`explain_node`] with custom tag bands. Strengths come straight from
/// [`rule_activation`].
pub fn explain_node_with(
    u: usize,
    facts: &FactMatrix,
    params: &FuzzyParams<f64>,
    prediction: Option<usize>,
    bands: TagBands,
) -> Result<NodeExplanation> {
    if u >= facts.n() {
        return Err(Error::InvalidArgument(format!("node {u} outside 0..{}", facts.n())));
    }
    let row = facts.row(u);
    let r = rule_activation(&DenseMatrix::new(1, 3, row.to_vec())?, params.theta.data(), params.alpha.data())?;
    let strengths = [r.get(0, 0), r.get(0, 1), r.get(0, 2)];
    let firings = (0..3)
        .map(|i| RuleFiring {
            rule: i + 1,
            name: RULE_NAMES[i].into(),
            feature: RULE_FEATURES[i].into(),
            value: row[i],
            theta: params.theta.data()[i],
            strength: strengths[i],
            tag: bands.tag(strengths[i]),
        })
        .collect();
    Ok(NodeExplanation { node: u, facts: row, strengths, firings, prediction })
}

/// Mean learned thresholds per dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdTable {
    pub rows: Vec<(String, [f64; 3])>,
}

impl ThresholdTable {
    pub fn text(&self) -> String {
        let cells: Vec<[String; 4]> = self
            .rows
            .iter()
            .map(|(name, t)| [name.clone(), format!("{:.2}", t[0]), format!("{:.2}", t[1]), format!("{:.2}", t[2])])
            .collect();
        let header = ["Dataset", COLUMN_TITLES[0], COLUMN_TITLES[1], COLUMN_TITLES[2]];
        let width = |j: usize| cells.iter().map(|c| c[j].chars().count()).chain([header[j].chars().count()]).max().unwrap();
        let widths: Vec<usize> = (0..4).map(width).collect();
        let line = |c: [&str; 4]| {
            let mut s = format!("{:<w$}", c[0], w = widths[0]);
            for j in 1..4 {
                let pad = widths[j] - c[j].chars().count();
                let _ = write!(s, "  {}{}", " ".repeat(pad), c[j]);
            }
            s + "\n"
        };
        let mut s = line(header);
        for c in &cells {
            s += &line([&c[0], &c[1], &c[2], &c[3]]);
        }
        s
    }

    /// Full-precision values.
    pub fn tsv(&self) -> String {
        let mut s = String::from("dataset\ttheta1\ttheta2\ttheta3\n");
        for (name, t) in &self.rows {
            let _ = writeln!(s, "{name}\t{}\t{}\t{}", t[0], t[1], t[2]);
        }
        s
    }
}

/// Averages per-run thresholds for each named dataset.
pub fn threshold_table_from_runs(datasets: &[(&str, &[[f64; 3]])]) -> Result<ThresholdTable> {
    if datasets.is_empty() {
        return Err(Error::Empty("threshold table"));
    }
    let mut rows = Vec::with_capacity(datasets.len());
    for &(name, runs) in datasets {
        if runs.is_empty() {
            return Err(Error::InvalidArgument(format!("no runs with thresholds for {name}")));
        }
        let mut mean = [0.0; 3];
        for t in runs {
            for i in 0..3 {
                mean[i] += t[i];
            }
        }
        rows.push((name.to_string(), mean.map(|x| x / runs.len() as f64)));
    }
    Ok(ThresholdTable { rows })
}

/// [`threshold_table_from_runs`] over the θ of every run in each result.
pub fn threshold_table(results: &[CvResult], names: &[&str]) -> Result<ThresholdTable> {
    if results.len() != names.len() {
        return Err(Error::InvalidArgument(format!("{} results for {} names", results.len(), names.len())));
    }
    let thetas: Vec<Vec<[f64; 3]>> = results.iter().map(|r| r.runs.iter().filter_map(|run| run.theta).collect()).collect();
    let entries: Vec<(&str, &[[f64; 3]])> = names.iter().copied().zip(thetas.iter().map(Vec::as_slice)).collect();
    threshold_table_from_runs(&entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::train::{aggregate, RunResult};
    use crate::metrics::EvalReport;

    fn params(theta: [f64; 3], alpha: [f64; 3]) -> FuzzyParams<f64> {
        FuzzyParams { theta: DenseMatrix::new(1, 3, theta.to_vec()).unwrap(), alpha: DenseMatrix::new(1, 3, alpha.to_vec()).unwrap() }
    }

    fn sigmoid_inverse_alpha(strength: f64, gap: f64) -> f64 {
        (strength / (1.0 - strength)).ln() / gap
    }

    /// Bladder node: α₁ and α₃ recovered from its strengths. α₂ is not
    /// identifiable there (the node sits on θ₂); it is set to α₃.
    fn organ_params() -> FuzzyParams<f64> {
        let a1 = sigmoid_inverse_alpha(0.60, 10.0 - 7.28);
        let a3 = sigmoid_inverse_alpha(0.56, 0.73 - 0.67);
        params([7.28, 0.18, 0.67], [a1, a3, a3])
    }

    fn facts(rows: &[[f64; 3]]) -> FactMatrix {
        FactMatrix(DenseMatrix::new(rows.len(), 3, rows.concat()).unwrap())
    }

    #[test]
    fn organ_rule_box() {
        let text = render_rules(&params([7.28, 0.18, 0.67], [1.0; 3])).text();
        assert_eq!(
            text,
            "Rule 1: IF degree ≥ 7.28 THEN high_connectivity\n\
             Rule 2: IF clustering ≥ 0.18 THEN high_cliquishness\n\
             Rule 3: IF 2-hop label agreement ≥ 0.67 THEN high_label_consistency\n"
        );
    }

    #[test]
    fn blood_and_morpho_rule_boxes() {
        let blood = render_rules(&params([4.15, 0.25, 0.81], [1.0; 3])).text();
        assert!(blood.starts_with("Rule 1: IF degree ≥ 4.15 THEN high_connectivity\n"));
        assert!(blood.contains("Rule 2: IF clustering ≥ 0.25 THEN high_cliquishness\n"));
        assert!(blood.ends_with("Rule 3: IF 2-hop label agreement ≥ 0.81 THEN high_label_consistency\n"));
        let morpho = render_rules(&params([11.52, 0.09, 0.92], [1.0; 3])).text();
        assert!(morpho.starts_with("Rule 1: IF degree ≥ 11.52 THEN"));
    }

    #[test]
    fn zero_thresholds_render() {
        let text = render_rules(&params([0.0; 3], [1.0; 3])).text();
        assert_eq!(text.lines().count(), 3);
        assert!(text.lines().all(|l| l.contains("≥ 0.00 THEN")));
    }

    #[test]
    fn json_keeps_full_precision() {
        let p = params([7.283_456_789, 0.181, 0.669_999], [0.149, 2.5, 4.02]);
        let r: RuleReport = serde_json::from_str(&render_rules(&p).json()).unwrap();
        assert_eq!(r.rules[0].theta, 7.283_456_789);
        assert_eq!(r.rules[2].alpha, 4.02);
    }

    #[test]
    fn bladder_node() {
        let e = explain_node(0, &facts(&[[10.0, 0.18, 0.73]]), &organ_params(), Some(3)).unwrap();
        for (s, want) in e.strengths.iter().zip([0.60, 0.50, 0.56]) {
            assert!((s - want).abs() < 0.005, "{s} vs {want}");
        }
        let tags: Vec<Activation> = e.firings.iter().map(|f| f.tag).collect();
        assert_eq!(tags, vec![Activation::Activated, Activation::Marginal, Activation::Activated]);
        let text = e.text();
        assert!(text.contains("degree = 10.00 ≥ θ1 = 7.28 ⇒ Rule 1 activated (strength = 0.60)"), "{text}");
        assert!(text.contains("Rule 2 marginally activated (strength = 0.50)"));
    }

    #[test]
    fn lung_left_node() {
        let e = explain_node(0, &facts(&[[3.0, 0.0, 0.94]]), &organ_params(), None).unwrap();
        assert_eq!(e.firings[0].tag, Activation::NotActivated);
        assert_eq!(e.firings[1].tag, Activation::NotActivated);
        assert!((e.strengths[2] - 0.74).abs() <= 0.02, "{}", e.strengths[2]);
        assert_eq!(e.firings[2].tag, Activation::Activated);
    }

    #[test]
    fn at_threshold_all_marginal() {
        let p = params([5.0, 0.3, 0.6], [2.0, -3.0, 7.0]);
        let e = explain_node(0, &facts(&[[5.0, 0.3, 0.6]]), &p, None).unwrap();
        assert_eq!(e.strengths, [0.5; 3]);
        assert!(e.firings.iter().all(|f| f.tag == Activation::Marginal));
    }

    #[test]
    fn strengths_equal_rule_activation() {
        let f = facts(&[[1.0, 0.2, 0.3], [12.0, 0.9, 0.1], [0.0, 0.0, 1.0]]);
        let p = params([4.0, 0.5, 0.5], [0.7, -2.0, 9.0]);
        let r = rule_activation(f.matrix(), p.theta.data(), p.alpha.data()).unwrap();
        for u in 0..3 {
            let e = explain_node(u, &f, &p, None).unwrap();
            assert_eq!(e.strengths.to_vec(), r.row(u).to_vec());
        }
        assert!(explain_node(3, &f, &p, None).is_err());
    }

    fn result_with_thetas(thetas: &[[f64; 3]]) -> CvResult {
        let report = EvalReport { accuracy: 0.5, macro_f1: 0.5, sensitivity: 0.5, roc_auc: 0.5, confusion: vec![] };
        let runs = thetas
            .iter()
            .map(|&t| RunResult { seed: 42, fold: 0, metrics: report.clone(), theta: Some(t), alpha: None, final_loss: None })
            .collect();
        aggregate(runs).unwrap()
    }

    #[test]
    fn threshold_means() {
        let one = threshold_table(&[result_with_thetas(&[[3.0, 0.1, 0.2]])], &["a"]).unwrap();
        assert_eq!(one.rows[0].1, [3.0, 0.1, 0.2]);
        let two = threshold_table(&[result_with_thetas(&[[7.0, 0.0, 0.0], [8.0, 0.0, 0.0]])], &["a"]).unwrap();
        assert_eq!(two.rows[0].1[0], 7.5);
        assert!(threshold_table(&[], &[]).is_err());
    }

    #[test]
    fn threshold_rows_average_and_align() {
        let organ = result_with_thetas(&[[7.20, 0.17, 0.66], [7.36, 0.19, 0.68], [7.28, 0.18, 0.67]]);
        let blood = result_with_thetas(&[[4.10, 0.24, 0.80], [4.20, 0.26, 0.82]]);
        let morpho = result_with_thetas(&[[11.52, 0.09, 0.92]]);
        let t = threshold_table(&[organ, blood, morpho], &["OrganCMNIST", "BloodMNIST", "MorphoMNIST"]).unwrap();
        let text = t.text();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 4);
        let cols = |l: &str| l.split_whitespace().map(str::to_string).collect::<Vec<_>>();
        assert_eq!(cols(lines[1]), ["OrganCMNIST", "7.28", "0.18", "0.67"]);
        assert_eq!(cols(lines[2]), ["BloodMNIST", "4.15", "0.25", "0.81"]);
        assert_eq!(cols(lines[3]), ["MorphoMNIST", "11.52", "0.09", "0.92"]);
        // columns line up
        let ends: Vec<usize> = lines.iter().map(|l| l.chars().count()).collect();
        assert!(ends.windows(2).all(|w| w[0] == w[1]));
        assert!(t.tsv().starts_with("dataset\ttheta1\ttheta2\ttheta3\nOrganCMNIST\t7.28"));
    }
}
