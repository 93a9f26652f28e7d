use std::io::Write;

use super::RankedList;
use crate::num::Score;

/// Writes one list in TREC run format: `turn_id Q0 docid rank score tag`,
/// ranks from 1, scores with six decimals.
pub fn write_run<S: Score, W: Write>(mut out: W, list: &RankedList<S>) -> std::io::Result<()> {
    for (i, e) in list.entries.iter().enumerate() {
        writeln!(
            out,
            "{} Q0 {} {} {:.6} {}",
            list.turn_id,
            e.external_id,
            i + 1,
            e.score,
            list.method_tag
        )?;
    }
    Ok(())
}

pub fn write_runs<'a, S: Score, W: Write>(
    mut out: W,
    lists: impl IntoIterator<Item = &'a RankedList<S>>,
) -> std::io::Result<()> {
    for list in lists {
        write_run(&mut out, list)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::retrieval::RankedEntry;

    #[test]
    fn trec_lines() {
        let list = RankedList::from_scored(
            "31_1",
            "ql",
            vec![
                RankedEntry {
                    external_id: "b".into(),
                    score: -1.5f64,
                },
                RankedEntry {
                    external_id: "a".into(),
                    score: -0.25,
                },
            ],
        );
        let mut buf = Vec::new();
        write_run(&mut buf, &list).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "31_1 Q0 a 1 -0.250000 ql\n31_1 Q0 b 2 -1.500000 ql\n"
        );
    }
}
