//! PubMed `PubmedArticle` XML → `WorkStub`.

use chrono::NaiveDate;
use roxmltree::{Document, Node, ParsingOptions};

use super::{push_unique, Parsed, RejectReason, StubAuthor, WorkStub};
use crate::identifiers::{normalize_doi, validate_issn, validate_orcid};
use crate::model::{SourceKind, VenueType, Version, WorkType};

fn parse_doc(xml: &str) -> Result<Document<'_>, RejectReason> {
    let opts = ParsingOptions { allow_dtd: true, ..ParsingOptions::default() };
    Document::parse_with_options(xml, opts).map_err(|e| RejectReason::MalformedXml(e.to_string()))
}

fn child<'a, 'i>(node: Node<'a, 'i>, name: &str) -> Option<Node<'a, 'i>> {
    node.children().find(|n| n.has_tag_name(name))
}

fn path<'a, 'i>(node: Node<'a, 'i>, names: &[&str]) -> Option<Node<'a, 'i>> {
    names.iter().try_fold(node, |n, name| child(n, name))
}

/// All text under a node (mixed content such as `<i>` is flattened).
fn text_of(node: Node) -> String {
    let raw: String = node.descendants().filter(|n| n.is_text()).filter_map(|n| n.text()).collect();
    crate::text::collapse_ws(&raw)
}

fn nonempty(s: String) -> Option<String> {
    (!s.is_empty()).then_some(s)
}

/// Parse a single `<PubmedArticle>` element given as an XML string.
pub fn parse_pubmed(xml: &str, default_date: NaiveDate) -> Result<Parsed, RejectReason> {
    let doc = parse_doc(xml)?;
    let root = doc.root_element();
    let article = if root.has_tag_name("PubmedArticle") {
        root
    } else {
        root.descendants()
            .find(|n| n.has_tag_name("PubmedArticle"))
            .ok_or_else(|| RejectReason::NotARecord("no PubmedArticle element".into()))?
    };
    parse_article(article, default_date)
}

/// Parse every `<PubmedArticle>` of a `<PubmedArticleSet>` document. A
/// document that is not well-formed is rejected as a whole.
pub fn parse_pubmed_set(xml: &str, default_date: NaiveDate) -> Result<Vec<Result<Parsed, RejectReason>>, RejectReason> {
    let doc = parse_doc(xml)?;
    Ok(doc
        .root_element()
        .descendants()
        .filter(|n| n.has_tag_name("PubmedArticle"))
        .map(|a| parse_article(a, default_date))
        .collect())
}

fn parse_article(article: Node, default_date: NaiveDate) -> Result<Parsed, RejectReason> {
    let mut warnings = Vec::new();
    let citation = child(article, "MedlineCitation")
        .ok_or_else(|| RejectReason::NotARecord("PubmedArticle without MedlineCitation".into()))?;
    let pmid = child(citation, "PMID").map(text_of).and_then(nonempty);
    let art = child(citation, "Article");

    let title = art.and_then(|a| child(a, "ArticleTitle")).map(text_of).and_then(nonempty);

    let mut doi = None;
    let doi_candidates = art
        .into_iter()
        .flat_map(|a| a.children().filter(|n| n.has_tag_name("ELocationID") && n.attribute("EIdType") == Some("doi")))
        .chain(
            path(article, &["PubmedData", "ArticleIdList"])
                .into_iter()
                .flat_map(|l| l.children().filter(|n| n.has_tag_name("ArticleId") && n.attribute("IdType") == Some("doi"))),
        );
    for node in doi_candidates {
        match normalize_doi(&text_of(node)) {
            Ok(d) => {
                doi = Some(d);
                break;
            }
            Err(e) => warnings.push(format!("DOI skipped: {e}")),
        }
    }

    let source_record_id = match (&pmid, &doi) {
        (Some(p), _) => p.clone(),
        (None, Some(d)) => d.as_str().to_owned(),
        (None, None) => return Err(RejectReason::MissingIdentifier),
    };

    let r#abstract = art
        .and_then(|a| child(a, "Abstract"))
        .map(|abs| {
            abs.children().filter(|n| n.has_tag_name("AbstractText")).map(text_of).collect::<Vec<_>>().join(" ")
        })
        .and_then(nonempty);

    let journal = art.and_then(|a| child(a, "Journal"));
    let mut issns = Vec::new();
    for node in journal.into_iter().flat_map(|j| j.children().filter(|n| n.has_tag_name("ISSN"))) {
        match validate_issn(&text_of(node)) {
            Ok(i) => push_unique(&mut issns, i),
            Err(e) => warnings.push(format!("ISSN skipped: {e}")),
        }
    }
    let venue_name = journal.and_then(|j| child(j, "Title")).map(text_of).and_then(nonempty);
    let publication_year = journal.and_then(|j| path(j, &["JournalIssue", "PubDate"])).and_then(|d| {
        let y = child(d, "Year").map(text_of).or_else(|| child(d, "MedlineDate").map(text_of))?;
        match y.get(..4).and_then(|s| s.parse::<i32>().ok()) {
            Some(y) => Some(y),
            None => {
                warnings.push(format!("publication year {y:?} skipped"));
                None
            }
        }
    });

    let mut stub_authors = Vec::new();
    for a in art.and_then(|a| child(a, "AuthorList")).into_iter().flat_map(|l| l.children().filter(|n| n.has_tag_name("Author"))) {
        let last = child(a, "LastName").map(text_of).unwrap_or_default();
        let fore = child(a, "ForeName").or_else(|| child(a, "Initials")).map(text_of).unwrap_or_default();
        let name = if last.is_empty() {
            child(a, "CollectiveName").map(text_of).unwrap_or_default()
        } else {
            crate::text::collapse_ws(&format!("{fore} {last}"))
        };
        if name.is_empty() {
            warnings.push("author without a name skipped".into());
            continue;
        }
        let mut orcid = None;
        for id in a.children().filter(|n| n.has_tag_name("Identifier") && n.attribute("Source") == Some("ORCID")) {
            match validate_orcid(&text_of(id)) {
                Ok(o) => orcid = Some(o),
                Err(e) => warnings.push(format!("author ORCID skipped: {e}")),
            }
        }
        let raw_affiliations = a
            .children()
            .filter(|n| n.has_tag_name("AffiliationInfo"))
            .filter_map(|info| child(info, "Affiliation").map(text_of))
            .filter(|s| !s.is_empty())
            .collect();
        stub_authors.push(StubAuthor { raw_name: name, orcid, raw_affiliations });
    }

    let work_type = art
        .and_then(|a| child(a, "PublicationTypeList"))
        .map(|l| {
            let types: Vec<String> = l.children().filter(|n| n.has_tag_name("PublicationType")).map(text_of).collect();
            if types.iter().any(|t| t == "Dataset") {
                WorkType::Dataset
            } else if types.iter().any(|t| t == "Journal Article") {
                WorkType::JournalArticle
            } else {
                WorkType::Other
            }
        })
        .unwrap_or(WorkType::JournalArticle);

    let mut referenced_dois = Vec::new();
    for r in article.descendants().filter(|n| n.has_tag_name("Reference")) {
        let Some(list) = child(r, "ArticleIdList") else { continue };
        for id in list.children().filter(|n| n.has_tag_name("ArticleId") && n.attribute("IdType") == Some("doi")) {
            match normalize_doi(&text_of(id)) {
                Ok(d) => push_unique(&mut referenced_dois, d),
                Err(e) => warnings.push(format!("reference skipped: {e}")),
            }
        }
    }
    if let Some(d) = &doi {
        referenced_dois.retain(|r| r != d);
    }

    Ok(Parsed {
        stub: WorkStub {
            source: SourceKind::Pubmed,
            url: pmid.as_ref().map(|p| format!("https://pubmed.ncbi.nlm.nih.gov/{p}/")),
            source_record_id,
            doi,
            title,
            r#abstract,
            publication_year,
            work_type,
            stub_authors,
            venue_name,
            venue_type: VenueType::Journal,
            issns,
            version_hint: Version::Unknown,
            license: None,
            referenced_dois,
            retrieved_date: default_date,
        },
        warnings,
    })
}
