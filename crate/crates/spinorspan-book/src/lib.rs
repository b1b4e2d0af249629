//! Runs the guide's code blocks as doctests.

macro_rules! chapter {
    ($name:ident, $file:literal) => {
        doc_comment::doc_comment!(
            include_str!(concat!("../../../book/src/", $file)),
            pub mod $name {}
        );
    };
}

chapter!(intro, "intro.md");
chapter!(gradings, "gradings.md");
chapter!(multiplets, "multiplets.md");
chapter!(tate, "tate.md");
chapter!(linfty, "linfty.md");
chapter!(transfer, "transfer.md");
chapter!(span, "span.md");
chapter!(cli, "cli.md");

doc_comment::doc_comment!(include_str!("../../../README.md"), pub mod readme {});
