use super::{Level, Ruleset};

#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct RuleInfo {
    pub id: &'static str,
    pub ruleset: Ruleset,
    pub techniques: &'static [&'static str],
    pub description: &'static str,
    /// False for rows that need rendering or script execution to decide.
    pub implemented: bool,
    /// Step-by-step procedure for deciding the rule on a piece of markup.
    pub test_rule: &'static str,
}

impl RuleInfo {
    pub fn level(&self) -> Level {
        match self.ruleset {
            Ruleset::A => Level::Violation,
            Ruleset::Q => Level::Failed,
        }
    }
}

const fn a(
    id: &'static str,
    techniques: &'static [&'static str],
    description: &'static str,
    implemented: bool,
    test_rule: &'static str,
) -> RuleInfo {
    RuleInfo { id, ruleset: Ruleset::A, techniques, description, implemented, test_rule }
}

const fn q(
    id: &'static str,
    techniques: &'static [&'static str],
    description: &'static str,
    implemented: bool,
    test_rule: &'static str,
) -> RuleInfo {
    RuleInfo { id, ruleset: Ruleset::Q, techniques, description, implemented, test_rule }
}

const LANDMARK_UNIQUE: &[&str] = &["ARIA6", "ARIA13"];

pub static RULESET_A: &[RuleInfo] = &[
    a("text_contrast_sufficient", &["G18", "G145"],
      "The contrast ratio of text with its background must meet WCAG AA requirements.", true,
      "For each visible element with its own text whose text color and background color are both known, compute the contrast ratio. It fails when the ratio is below 4.5:1, or below 3:1 for large text (at least 24px, or at least 18.66px and bold)."),
    a("svg_graphics_labelled", &[],
      "A non-decorative SVG element must have an accessible name.", true,
      "For each visible svg element without role=\"presentation\" or role=\"none\", check aria-labelledby, aria-label, a <title> child and the title attribute in that order. It fails when none yields text."),
    a("aria_hidden_nontabbable", &[],
      "A hidden element should not contain any tabbable elements.", true,
      "For each element with aria-hidden=\"true\", check whether it or any descendant can receive keyboard focus (tabindex >= 0, or a link with href, button, input, select, textarea or iframe that is not disabled). It fails when one can."),
    a("img_alt_valid", &["H37", "G94", "F38"],
      "Images must have accessible names unless they are decorative or redundant.", true,
      "For each img element, pass if it has an alt attribute (alt=\"\" marks it decorative) or a non-empty aria-labelledby, aria-label or title. Otherwise it fails."),
    a("img_alt_redundant", &["H2"],
      "The text alternative for an image within a link should not repeat the link text or adjacent link text.", true,
      "For each img with non-empty alt inside a link, compare the alt text (case-insensitive, whitespace collapsed) with the link's own text and with the text of the links right before and after it. It fails on a match."),
    a("input_label_exists", &["H44"],
      "Each form control must have an associated label.", true,
      "For each input (other than hidden, submit, reset, button and image), select and textarea, look for a <label for> pointing at its id, an enclosing <label>, aria-labelledby, aria-label or title. It fails when none gives a name."),
    a("label_ref_valid", &["H44"],
      "The 'for' attribute for a label must reference a non-empty, unique 'id' attribute of an input element.", true,
      "For each label with a for attribute, the value must be non-empty and match the id of exactly one element, and that element must be a form control. Otherwise it fails."),
    a("a_text_purpose", &["H30"],
      "Hyperlinks must have an accessible name for their purpose.", true,
      "For each visible link with an href, compute its accessible name from aria-labelledby, aria-label, title and its content, counting alt text of contained images. It fails when the name is empty."),
    a("aria_child_tabbable", &[],
      "UI components must have at least one tabbable descendant for keyboard access.", false,
      "For each composite widget role, check that at least one owned element is reachable with the Tab key."),
    a("aria_complementary_labelled", &[],
      "Each element with the \"complementary\" role must have a label that describes its purpose.", true,
      "For each aside element or element with role=\"complementary\", it fails when aria-labelledby, aria-label and title give no text."),
    a("aria_navigation_label_unique", LANDMARK_UNIQUE,
      "Each element with the \"navigation\" role must have a unique label that describes its purpose.", true,
      "When a page has more than one navigation landmark, each must carry a label (aria-labelledby, aria-label or title) that no other navigation landmark uses. A missing or repeated label fails."),
    a("aria_id_unique", &[],
      "The ARIA property must reference a non-empty unique id of an existing element that is visible.", true,
      "For each ARIA attribute that holds id references (aria-labelledby, aria-describedby, aria-controls, aria-owns, aria-activedescendant, aria-flowto, aria-details, aria-errormessage), every id must be non-empty, belong to exactly one element, and that element must not be hidden. Visibility is judged from markup and styles without rendering."),
    a("aria_complementary_label_unique", LANDMARK_UNIQUE,
      "Each element with the \"complementary\" role must have a unique label that describes its purpose.", true,
      "When a page has more than one complementary landmark, each must carry a label that no other complementary landmark uses. A missing or repeated label fails."),
    a("frame_title_exists", &["H64"],
      "Inline frames must have a unique, non-empty 'title' attribute.", true,
      "For each iframe or frame, the title attribute must be present, contain non-whitespace text and differ from every other frame title on the page."),
    a("table_headers_exists", &["H43", "H63"],
      "Data tables must identify headers.", true,
      "For each table that is not marked role=\"presentation\" or role=\"none\", it fails when the table has no th cell and no cell with role columnheader or rowheader."),
    a("aria_banner_label_unique", LANDMARK_UNIQUE,
      "Each element with the \"banner\" role must have a unique label that describes its purpose.", true,
      "When a page has more than one banner landmark, each must carry a label that no other banner landmark uses. A missing or repeated label fails."),
    a("aria_banner_single", &[],
      "A page, document, or application should only have one element with the \"banner\" role.", true,
      "Count the top-level header elements and elements with role=\"banner\". Every banner after the first fails."),
    a("label_name_visible", &[],
      "Accessible names must match or contain the visible label text.", false,
      "Compare each widget's accessible name with the text rendered as its visible label."),
    a("aria_widget_labelled", &["ARIA4"],
      "Interactive components must have a programmatically associated name.", false,
      "For each element with a widget role, compute its accessible name and fail when it is empty."),
    a("element_scrollable_tabbable", &["G202"],
      "Scrollable elements should be tabbable or contain tabbable content.", false,
      "For each element whose rendered content overflows and scrolls, check that it or a descendant is tabbable."),
    a("html_lang_exists", &["H57"],
      "The page must identify the default language of the document with a 'lang' attribute.", true,
      "The html element must have a lang (or xml:lang) attribute with a non-empty value."),
    a("input_label_after", &[],
      "An input element must be labeled.", true,
      "For each input with an associated label, a checkbox or radio button must come before its label text, and any other input must come after its label text. It fails when the order is reversed."),
    a("label_content_exists", &[],
      "A label element must have non-empty text or an element with an accessible name.", true,
      "For each label element, compute its name from aria-labelledby, aria-label and its content (including image alt text). It fails when the name is empty."),
    a("table_scope_valid", &["H63"],
      "The scope attribute must be used correctly to associate table headers and data cells.", true,
      "For each cell with a scope attribute, the cell must be a th and the value must be row, col, rowgroup or colgroup."),
    a("aria_contentinfo_label_unique", LANDMARK_UNIQUE,
      "Each element with the \"contentinfo\" role must have a unique label that describes its purpose.", true,
      "When a page has more than one contentinfo landmark, each must carry a label that no other contentinfo landmark uses. A missing or repeated label fails."),
    a("aria_contentinfo_single", &[],
      "A page, document, or application should only have one element with the \"contentinfo\" role.", true,
      "Count the top-level footer elements and elements with role=\"contentinfo\". Every contentinfo landmark after the first fails."),
    a("aria_main_label_unique", LANDMARK_UNIQUE,
      "Each element with the \"main\" role must have a unique label that describes its purpose.", true,
      "When a page has more than one main landmark, each must carry a label that no other main landmark uses. A missing or repeated label fails."),
    a("aria_region_label_unique", LANDMARK_UNIQUE,
      "Each element with the \"region\" role must have a unique label that describes its purpose.", true,
      "When a page has more than one region landmark, each must carry a label that no other region landmark uses. A missing or repeated label fails."),
    a("aria_role_valid", &["ARIA4"],
      "Elements must have valid roles per the ARIA specification.", true,
      "For each element with a role attribute, at least one of its space-separated tokens must be a WAI-ARIA 1.2 role."),
    a("combobox_popup_reference", &[],
      "A combobox must reference a valid popup element.", false,
      "For each combobox, aria-controls must point to a rendered listbox, grid, tree or dialog."),
    a("element_orientation_unlocked", &[],
      "Content must not restrict its orientation to a single display orientation.", false,
      "Check that no CSS transform or media query locks the page to portrait or landscape."),
    a("page_title_exists", &["G88"],
      "The page should have a title that correctly identifies the subject of the page.", true,
      "The document (an html element) must contain a <title> element with non-whitespace text."),
    a("skip_main_exists", &["G1"],
      "Pages must provide a way to skip directly to the main content.", true,
      "The page passes if it has a main landmark (<main> or role=\"main\"), or if its first keyboard-reachable link points to an in-page anchor that exists."),
    a("table_headers_related", &["H43", "H63"],
      "Table headers must be related to their corresponding data cells.", false,
      "For each data cell, the rendered table grid must associate it with at least one header cell."),
];

pub static RULESET_Q: &[RuleInfo] = &[
    q("AltFailure", &["F30"],
      "Failure of Success Criterion 1.1.1 and 1.2.1 due to using text alternatives that are not alternatives", true,
      "For each img with a non-empty src and an alt attribute (not marked presentational), it fails when the alt is the image file name (with or without extension) or a placeholder such as image, picture, photo, img, spacer or the empty string."),
    q("CaptionDataTbl", &["H39"],
      "Using caption elements to associate data table captions with data tables", true,
      "For each data table, it fails when the table has no caption child with non-whitespace text."),
    q("ColorContrastFail", &["F24"],
      "Failure of Success Criterion 1.4.3, 1.4.6 and 1.4.8 due to specifying foreground colors without specifying background colors or vice versa", true,
      "For each CSS declaration block, including style attributes, it fails when the block sets color without a background or background-color, or sets a background without color."),
    q("CombineAdj", &["H2"],
      "Combining adjacent image and text links for the same resource", true,
      "For each pair of adjacent links with the same href, it fails when one of them contains only an image, since the two should be one link."),
    q("FocusRemoveFail", &["F55"],
      "Failure of Success Criteria 2.1.1, 2.4.7, and 3.2.1 due to using script to remove focus when focus is received", true,
      "For each element with an onfocus handler, it fails when the handler calls blur()."),
    q("FontSizeCSS", &["C12", "C13", "C14"],
      "Using percent, em, names for font sizes", true,
      "For each font-size declaration (or font shorthand), it fails when the size uses an absolute unit: px, pt, cm, mm or in. Use %, em, rem or keywords instead."),
    q("HeadingsOrg", &["G141"],
      "Organizing a page using headings", true,
      "Walk h1 to h6 in document order. A heading fails when its level is more than one deeper than the previous heading. If headings exist but none is an h1, the first heading fails."),
    q("IdHeadersDataTbl", &["H43"],
      "Using id and headers attributes to associate data cells with header cells in data tables", true,
      "For each cell with a headers attribute, every id in it must belong to a th of the same table."),
    q("ImgLinkFail", &["F89"],
      "Failure of Success Criteria 2.4.4, 2.4.9, and 4.1.2 due to not providing an accessible name for an image which is the only content in a link", true,
      "For each link whose only content is one or more images, it fails when the link's accessible name (from aria attributes, title or the images' alt text) is empty."),
    q("LabelPos", &["G162"],
      "Positioning labels to maximize predictability of relationships", true,
      "For each labelled input, checkbox and radio labels must follow the control and all other labels must precede it."),
    q("LayoutTblFail", &["F46"],
      "Failure of Success Criterion 1.3.1 due to using th elements, caption elements, or non-empty summary attributes in layout tables", true,
      "For each table with role=\"presentation\" or role=\"none\", it fails when it contains th or caption elements or has a non-empty summary attribute."),
    q("LinkTitleAttr", &["H33"],
      "Supplementing link text with the title attribute", true,
      "For each link with a title attribute, it fails when the title repeats the link text exactly, since it then adds nothing."),
    q("ListLinkGroups", &["H48"],
      "Using ol, ul, and dl for lists or groups of links", true,
      "For each element outside ol, ul and dl that has link children, it fails when five or more links follow each other as siblings. Put such groups in a list."),
    q("ScopeDataTbl", &["H63"],
      "Using the scope attribute to associate header cells and data cells in data tables", true,
      "For each th in a data table, it fails when the th has no scope attribute and is not tied to cells through headers and id."),
    q("SkipToMain", &["G1"],
      "Adding a link at the top of each page that goes directly to the main content area", true,
      "On a full page, the first link must point to an in-page anchor that is the main landmark, lies inside it, or is named for the main content."),
    q("SubmitBtn", &["H32"],
      "Providing submit buttons", true,
      "For each form, it fails when the form has no input of type submit or image and no button whose type is submit or absent."),
    q("TblMarkup", &["H51"],
      "Using table markup to present tabular information", false,
      "Check that information laid out as a grid on screen is marked up with table elements."),
];

pub fn catalog(ruleset: Ruleset) -> &'static [RuleInfo] {
    match ruleset {
        Ruleset::A => RULESET_A,
        Ruleset::Q => RULESET_Q,
    }
}

pub fn lookup(id: &str) -> Option<&'static RuleInfo> {
    RULESET_A.iter().chain(RULESET_Q).find(|r| r.id == id)
}

pub fn implemented(ruleset: Ruleset) -> impl Iterator<Item = &'static RuleInfo> {
    catalog(ruleset).iter().filter(|r| r.implemented)
}
