//! Caption and entity metrics on small hand-made cases.

use newscap::entities::EntityTag;
use newscap::metrics::{
    bleu_n, cider, consensus_degree, entity_precision_recall, rouge_l, EntityMention, MatchRegime,
    SampleEntities,
};

fn toks(s: &str) -> Vec<String> {
    s.split_whitespace().map(String::from).collect()
}

fn main() -> newscap::Result<()> {
    let cand = toks("a b c d");
    let refr = toks("a c d");
    println!("ROUGE-L(a b c d | a c d) = {:.4}", rouge_l(&cand, &refr));
    println!("BLEU-1(the the the the | the cat) = {:.4}", bleu_n(&toks("the the the the"), &[toks("the cat")], 1));

    let refs = vec![
        toks("conductor leads the orchestra"),
        toks("a crowd gathers in the square"),
        toks("players celebrate a goal"),
    ];
    println!("CIDEr(identical) = {:.4}", cider(&refs, &refs, &refs)?);

    let sample = SampleEntities {
        predicted: vec![EntityMention::new("Falletta", EntityTag::Person)],
        ground_truth: vec![
            EntityMention::new("JoAnn Falletta", EntityTag::Person),
            EntityMention::new("Buffalo Philharmonic Orchestra", EntityTag::Org),
        ],
    };
    for regime in [MatchRegime::Exact, MatchRegime::Partial] {
        let pr = entity_precision_recall(std::slice::from_ref(&sample), regime);
        println!("{regime:?}: P {:.2}  R {:.2}  TP {}", pr.precision, pr.recall, pr.true_positives);
    }
    println!("consensus C(12, 6) = {}", consensus_degree(12, 6)?);
    Ok(())
}
