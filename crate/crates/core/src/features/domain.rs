use std::collections::HashSet;

/// Public suffix rules loaded from a bundled snapshot. Only plain rules are
/// supported; a host whose suffix is not listed falls back to its last label.
#[derive(Debug, Clone, Default)]
pub struct PublicSuffixList {
    suffixes: HashSet<String>,
    max_labels: usize,
}

impl PublicSuffixList {
    pub fn from_entries(entries: impl IntoIterator<Item = String>) -> Self {
        let suffixes: HashSet<String> = entries.into_iter().map(|e| e.trim_matches('.').to_lowercase()).collect();
        let max_labels = suffixes.iter().map(|s| s.split('.').count()).max().unwrap_or(1);
        PublicSuffixList { suffixes, max_labels }
    }

    /// Number of trailing labels of `labels` forming the public suffix.
    fn suffix_len(&self, labels: &[&str]) -> usize {
        let longest = self.max_labels.min(labels.len());
        (1..=longest).rev().find(|&n| self.suffixes.contains(&labels[labels.len() - n..].join("."))).unwrap_or(1)
    }
}

/// A host name split around its registrable domain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HostParts {
    /// e.g. `co.uk`
    pub suffix: String,
    /// e.g. `example.co.uk`
    pub registrable: String,
    /// The label directly left of the suffix, e.g. `example`.
    pub name: String,
    /// Labels left of the registrable domain, outermost first.
    pub subdomains: Vec<String>,
}

pub fn registrable_domain(host: &str, psl: &PublicSuffixList) -> HostParts {
    let host = host.trim_end_matches('.').to_lowercase();
    let labels: Vec<&str> = host.split('.').filter(|l| !l.is_empty()).collect();
    if labels.is_empty() {
        return HostParts { suffix: String::new(), registrable: host.clone(), name: host, subdomains: Vec::new() };
    }
    let n_suffix = psl.suffix_len(&labels);
    let suffix = labels[labels.len() - n_suffix..].join(".");
    if n_suffix == labels.len() {
        return HostParts { suffix: suffix.clone(), registrable: suffix, name: String::new(), subdomains: Vec::new() };
    }
    let name_idx = labels.len() - n_suffix - 1;
    HostParts {
        registrable: labels[name_idx..].join("."),
        name: labels[name_idx].to_string(),
        subdomains: labels[..name_idx].iter().map(|s| s.to_string()).collect(),
        suffix,
    }
}
