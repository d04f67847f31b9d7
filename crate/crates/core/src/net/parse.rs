use super::{Demand, NetError, Topology, TopologyBuilder};

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    }
    .trim()
}

/// Parses the `node` / `span` file format.
pub fn parse_topology(text: &str) -> Result<Topology, NetError> {
    let mut builder = TopologyBuilder::default();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = strip_comment(raw);
        if content.is_empty() {
            continue;
        }
        let fields: Vec<&str> = content.split_whitespace().collect();
        match fields.as_slice() {
            ["node", name] => {
                builder.add_node((*name).to_string(), line)?;
            }
            ["span", a, b, len] => {
                let a = builder.node_id(a).ok_or_else(|| NetError::UnknownNode {
                    line,
                    name: (*a).to_string(),
                })?;
                let b = builder.node_id(b).ok_or_else(|| NetError::UnknownNode {
                    line,
                    name: (*b).to_string(),
                })?;
                let length: f64 = len.parse().map_err(|_| NetError::Syntax {
                    line,
                    message: format!("bad span length `{len}`"),
                })?;
                builder.add_span(a, b, length, line)?;
            }
            _ => {
                return Err(NetError::Syntax {
                    line,
                    message: format!("unrecognized line `{content}`"),
                })
            }
        }
    }
    builder.finish()
}

/// Parses `demand <a> <b> <units>` lines against `topology`.
pub fn parse_demands(topology: &Topology, text: &str) -> Result<Vec<Demand>, NetError> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = strip_comment(raw);
        if content.is_empty() {
            continue;
        }
        let fields: Vec<&str> = content.split_whitespace().collect();
        let ["demand", a, b, units] = fields.as_slice() else {
            return Err(NetError::Syntax {
                line,
                message: format!("unrecognized line `{content}`"),
            });
        };
        let lookup = |name: &str| {
            topology.node_id(name).ok_or_else(|| NetError::UnknownNode {
                line,
                name: name.to_string(),
            })
        };
        let (a, b) = (lookup(a)?, lookup(b)?);
        if a == b {
            return Err(NetError::SelfLoop {
                line,
                name: topology.node_name(a).to_string(),
            });
        }
        let units: u32 = units
            .parse()
            .ok()
            .filter(|&u| u > 0)
            .ok_or_else(|| NetError::Syntax {
                line,
                message: format!("demand units must be a positive integer, got `{units}`"),
            })?;
        out.push(Demand {
            id: out.len(),
            a,
            b,
            units,
        });
    }
    Ok(out)
}
