//! Small reference graphs for tests and demos.

use dakg_core::{Graph, Triple};

/// A 50-triple graph: ten people, each linked by five functional relations
/// to a city, employer, school, sport and pet. People come in five groups of
/// two that share every attribute.
pub fn toy_graph() -> Graph {
    let mut g = Graph::new();
    let rels = [("ex:livesIn", "city"), ("ex:worksAt", "firm"), ("ex:studiedAt", "school"), ("ex:plays", "sport"), ("ex:owns", "pet")];
    for i in 0..10 {
        for (r, kind) in rels {
            g.add(Triple::iris(&format!("ex:person{i}"), r, &format!("ex:{kind}{}", i % 5))).unwrap();
        }
    }
    g
}

#[cfg(test)]
mod tests {
    #[test]
    fn toy_has_fifty_triples() {
        assert_eq!(super::toy_graph().len(), 50);
    }
}
