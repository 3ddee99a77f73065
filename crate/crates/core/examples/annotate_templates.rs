//! Recognizes entities with a gazetteer and turns captions into templates.

use newscap::corpus::SampleBundle;
use newscap::entities::{annotate, EntityTag, Gazetteer};
use newscap::pipeline::annotate_sample;
use newscap::synth;

fn main() -> newscap::Result<()> {
    let mut gazetteer = Gazetteer::new();
    gazetteer.insert("Albert Einstein", EntityTag::Person);
    gazetteer.insert("Princeton University", EntityTag::Org);
    let bundle = SampleBundle::from_raw(
        "einstein",
        "Albert Einstein taught in Princeton University in 1921. He later moved on.",
        "Albert Einstein taught in Princeton University in 1921",
        None,
        None,
    );
    let sample = annotate_sample(&bundle, &gazetteer)?;
    println!("caption : {}", bundle.caption.raw_text);
    println!("template: {}", sample.template.join(" "));
    for e in &sample.article_entities {
        println!("  {:<8} {:<22} sentence {} offset {}", e.tag.as_str(), e.surface_text(), e.sentence_index, e.token_offset);
    }

    println!();
    let gazetteer = synth::gazetteer();
    for b in synth::mini_corpus(5, 1) {
        let s = annotate_sample(&b, &gazetteer)?;
        println!("{}  {}\n      {}", b.id(), b.caption.raw_text, s.template.join(" "));
    }

    let text = "Maria Okafor met officials from City Council in Denver in March.";
    let found: Vec<String> = annotate(text, &gazetteer)
        .iter()
        .map(|e| format!("{}={}", e.tag.as_str(), e.surface_text()))
        .collect();
    println!("\n{text}\n  {}", found.join(", "));
    Ok(())
}
