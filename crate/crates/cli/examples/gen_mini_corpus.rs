//! Regenerates `data/mini-corpus`: a 50-document corpus, mock extraction
//! replies keyed by prompt hash, and a pipeline config.
//!
//!     cargo run -p scogen --example gen_mini_corpus

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use scogen_core::backend::{BackendConfig, GenerationRequest};
use scogen_core::curation::{SeedDocument, Source};
use scogen_core::extraction::render_extraction_prompt;
use scogen_core::jsonl::write_jsonl;
use scogen_core::seeding::derive_rng;

const SEED: u64 = 2025;

const CONFIG: &str = r#"# Mini-corpus pipeline: mock backend, fully offline.
seed = 7
corpus = "corpus.jsonl"
work_dir = "work"

[curation]
min_chars = 500
max_chars = 20000

[minhash]
permutation_count = 256
bands = 32
rows = 8
threshold = 0.8

[backend]
kind = "mock"
mock_dir = "fixtures"
mock_fallback = "synthetic"
parallelism = 4

[extraction]
max_attempts = 3

[sampler]
strategy = "random"
temperature = 3.0
complexity = 2
count = 24

[export]
dedup_problems = false
"#;

struct Theme {
    scenario: &'static str,
    stratum: &'static str,
    /// (knowledge, usage, optional (skill, usage))
    knowledge: &'static [(&'static str, &'static str, Option<(&'static str, &'static str)>)],
    /// (category index, coding skill, usage)
    coding: &'static [(usize, &'static str, &'static str)],
    sentences: &'static [&'static str],
    code: &'static [&'static str],
}

const THEMES: &[Theme] = &[
    Theme {
        scenario: "Medical Imaging Diagnostic System for Breast Cancer Detection",
        stratum: "kaggle",
        knowledge: &[
            ("DICOM Image Processing", "read and normalize mammogram scans before training", Some(("Pixel Normalization", "scale raw pixel intensities into a fixed range"))),
            ("Transfer Learning", "reuse an ImageNet backbone for a small labelled set", Some(("Fine-tuning Pretrained CNNs", "unfreeze the last blocks and train with a low learning rate"))),
            ("Class Imbalance", "malignant cases are rare compared to benign ones", Some(("Stratified K-Fold Cross Validation", "keep the malignant ratio equal across folds"))),
            ("ROC Analysis", "compare classifiers independent of the decision threshold", None),
        ],
        coding: &[
            (0, "Medical Image Preprocessing Pipeline", "chain loading, windowing and resizing steps"),
            (1, "PyTorch DataLoader", "stream image batches with worker processes"),
            (1, "scikit-learn Metrics", "compute AUC and confusion matrices"),
            (2, "Pixel Array Manipulation", "apply vectorised transforms to numpy image arrays"),
        ],
        sentences: &[
            "I am training a classifier on mammogram images exported as DICOM files from our hospital archive.",
            "The pixel values range from zero to several thousand, so the network does not converge unless I rescale them.",
            "Only about six percent of the studies are malignant which makes plain accuracy look great while recall is terrible.",
            "I froze the ResNet backbone and only trained the final layer, but validation AUC is stuck around 0.71.",
            "Reading each file with pydicom inside the training loop is slow and the GPU sits idle most of the time.",
            "Someone suggested stratified folds so every split keeps the same share of positive cases.",
            "The radiologists want a threshold that keeps sensitivity above ninety percent even if specificity drops.",
            "Some scans are stored with a MONOCHROME1 photometric interpretation and appear inverted after loading.",
            "When I unfreeze the last two blocks with a learning rate of 1e-4 the loss finally starts to drop.",
            "I would like to plot the ROC curve per fold and report the mean area with its standard deviation.",
        ],
        code: &[
            "ds = pydicom.dcmread(path)\nimg = ds.pixel_array.astype(np.float32)\nimg = (img - img.min()) / (img.max() - img.min())",
            "model = torchvision.models.resnet50(weights=\"IMAGENET1K_V2\")\nfor p in model.parameters():\n    p.requires_grad = False\nmodel.fc = nn.Linear(2048, 2)",
            "skf = StratifiedKFold(n_splits=5, shuffle=True, random_state=0)\nfor train_idx, val_idx in skf.split(X, y):\n    fit_fold(train_idx, val_idx)",
        ],
    },
    Theme {
        scenario: "Retail Sales Forecasting Platform",
        stratum: "kaggle",
        knowledge: &[
            ("Time Series Seasonality", "weekly and yearly cycles dominate store sales", Some(("Seasonal Decomposition", "split the series into trend, season and residual"))),
            ("Holiday Effects", "promotions and public holidays shift demand", Some(("Calendar Feature Engineering", "encode holidays and paydays as model inputs"))),
            ("Forecast Evaluation", "choose an error metric robust to zero sales", Some(("Rolling Origin Backtesting", "refit on expanding windows and score each horizon"))),
        ],
        coding: &[
            (1, "pandas GroupBy Aggregation", "aggregate daily sales per store and item"),
            (2, "Rolling Window Statistics", "compute moving averages and lag features"),
            (1, "LightGBM Regression", "fit gradient boosted trees on tabular features"),
            (0, "Feature Pipeline Design", "keep training and inference transformations identical"),
        ],
        sentences: &[
            "We have three years of daily sales for about fifty stores and around four thousand products.",
            "The data has strong weekly patterns and a huge spike every December that the model keeps underestimating.",
            "I created lag features of seven and twenty eight days but they leak future information in my validation split.",
            "Many items have zero sales on most days so the mean absolute percentage error explodes.",
            "My manager wants a forecast for the next eight weeks at the store and item level by Monday.",
            "The gradient boosting model is fine on average but misses every public holiday by a wide margin.",
            "Is there a clean way to compute rolling means per group without a slow Python loop?",
            "We switched to a rolling origin evaluation and the scores became much more pessimistic and realistic.",
            "Promotions are stored in a separate table keyed by item and week which I merge onto the daily frame.",
            "I am not sure whether to model each store separately or pool everything into one global model.",
        ],
        code: &[
            "df[\"lag_7\"] = df.groupby([\"store\", \"item\"])[\"sales\"].shift(7)\ndf[\"roll_28\"] = df.groupby([\"store\", \"item\"])[\"sales\"].transform(lambda s: s.shift(1).rolling(28).mean())",
            "model = lgb.LGBMRegressor(n_estimators=2000, learning_rate=0.03, objective=\"tweedie\")\nmodel.fit(X_train, y_train, eval_set=[(X_val, y_val)])",
            "res = seasonal_decompose(series, period=7)\nres.plot()",
        ],
    },
    Theme {
        scenario: "Deployment Failure Log Analytics",
        stratum: "stackoverflow",
        knowledge: &[
            ("Assembly Binding", "the runtime resolves referenced DLL versions at load time", Some(("Fusion Log Analysis", "read binding logs to find the assembly that failed"))),
            ("Structured Logging", "log entries carry machine, timestamp and message fields", Some(("Log Schema Design", "choose stable field names for downstream queries"))),
            ("Incident Triage", "rank failures by frequency and blast radius", None),
        ],
        coding: &[
            (1, "pandas GroupBy Aggregation", "count failures per assembly and machine"),
            (2, "Hash Map Counting", "tally occurrences in a single pass"),
            (0, "Robust Input Parsing", "skip malformed rows without aborting the report"),
            (1, "Python csv Module", "stream large CSV exports row by row"),
        ],
        sentences: &[
            "Our deployment tool installs a dozen third party libraries and occasionally an assembly fails to bind at runtime.",
            "The failures are exported every night as a CSV file with timestamp, assembly name, machine id and a message.",
            "I need a report of the assemblies that fail most often and on which machines they fail.",
            "The file is several gigabytes so loading everything into memory at once is not an option on the build agent.",
            "Some rows are truncated because the logger crashed halfway through writing them.",
            "Enabling the fusion log viewer showed that version 1.2.3.4 was requested while 1.2.0.0 was installed.",
            "Binding redirects in the config file fixed one machine but the others still fail.",
            "I would like to group by assembly and collect the set of distinct machine ids for each one.",
            "The message column contains commas, so splitting each line manually breaks the parsing.",
            "Ideally the script prints only the top five assemblies and nothing else so it can feed our dashboard.",
        ],
        code: &[
            "counts = df.groupby(\"assembly_name\").agg(failures=(\"machine_id\", \"size\"), machines=(\"machine_id\", lambda s: sorted(set(s))))\nprint(counts.nlargest(5, \"failures\"))",
            "with open(path, newline=\"\") as fh:\n    for row in csv.DictReader(fh):\n        tally[row[\"assembly_name\"]] += 1",
            "<dependentAssembly>\n  <assemblyIdentity name=\"MyLibrary\" publicKeyToken=\"abc123\" />\n  <bindingRedirect oldVersion=\"0.0.0.0-1.2.3.4\" newVersion=\"1.2.3.4\" />\n</dependentAssembly>",
        ],
    },
    Theme {
        scenario: "Stock Price Monitoring Dashboard",
        stratum: "stackoverflow",
        knowledge: &[
            ("Moving Averages", "smooth noisy price series to reveal trends", Some(("Crossover Signal Detection", "flag where a short average crosses a long one"))),
            ("Market Data Feeds", "quotes arrive as irregular ticks per symbol", Some(("Resampling to OHLC Bars", "aggregate ticks into fixed interval bars"))),
            ("Volatility", "price dispersion over a window measures risk", None),
        ],
        coding: &[
            (2, "Rolling Window Statistics", "compute moving averages over price columns"),
            (1, "Matplotlib Plotting", "draw price lines with annotated signals"),
            (1, "pandas Resample", "turn ticks into minute bars"),
            (0, "Incremental Computation", "update indicators as new ticks arrive"),
        ],
        sentences: &[
            "I am building a small dashboard that shows live prices for a watchlist of about twenty symbols.",
            "The feed gives me irregular ticks and I want one minute bars with open, high, low and close.",
            "I compute a twenty period and a fifty period moving average and want to mark where they cross.",
            "Recomputing every average from scratch on each tick makes the chart lag behind the feed.",
            "The plot should highlight buy signals in green and sell signals in red directly on the price line.",
            "Weekends and market holidays create gaps that break my rolling calculations.",
            "Annualised volatility from daily returns looks far too high for some of the quieter symbols.",
            "Should I store the ticks in a deque per symbol or append to a dataframe and trim it?",
            "The resample call drops symbols that had no trades in a given minute.",
            "My crossover check fires twice when the two averages touch without actually crossing.",
        ],
        code: &[
            "bars = ticks.set_index(\"ts\").groupby(\"symbol\")[\"price\"].resample(\"1min\").ohlc()",
            "df[\"sma20\"] = df[\"close\"].rolling(20).mean()\ndf[\"sma50\"] = df[\"close\"].rolling(50).mean()\ncross = np.sign(df.sma20 - df.sma50).diff()",
            "ax.plot(df.index, df.close)\nax.scatter(buys.index, buys.close, marker=\"^\", color=\"green\")",
        ],
    },
    Theme {
        scenario: "Industrial IoT Sensor Anomaly Detection",
        stratum: "forum",
        knowledge: &[
            ("Sensor Drift", "calibration slowly shifts readings over months", Some(("Baseline Recalibration", "re-estimate the baseline from recent healthy data"))),
            ("Anomaly Scoring", "flag readings far from expected behaviour", Some(("Z-Score Thresholding", "mark points beyond k rolling standard deviations"))),
            ("Sampling Rate Mismatch", "devices report at different frequencies", Some(("Time Alignment", "interpolate streams onto a common clock"))),
        ],
        coding: &[
            (2, "Rolling Window Statistics", "track rolling mean and deviation per sensor"),
            (1, "NumPy Vectorization", "score thousands of readings without loops"),
            (0, "Streaming Pipeline Design", "process readings as they arrive from the broker"),
            (2, "Circular Buffer", "keep a fixed window of recent readings"),
        ],
        sentences: &[
            "We collect temperature and vibration readings from about three hundred machines on the factory floor.",
            "Each sensor publishes over MQTT, some every second and some every ten seconds.",
            "A bearing failure last month showed rising vibration for days before anyone noticed.",
            "Simple fixed thresholds create hundreds of false alarms whenever the ambient temperature changes.",
            "The readings of older sensors drift upward slowly so a model trained in spring fails in autumn.",
            "I want a rolling z-score per sensor with an alert when it stays above three for five minutes.",
            "Keeping a full dataframe per sensor in memory is too heavy for the edge gateway.",
            "Aligning the vibration and temperature streams is awkward because the timestamps never match exactly.",
            "Maintenance engineers want a ranked list of machines most likely to need attention this week.",
            "I tried an isolation forest but could not explain its alerts to the operators.",
        ],
        code: &[
            "window = collections.deque(maxlen=600)\nwindow.append(value)\nz = (value - np.mean(window)) / (np.std(window) + 1e-9)",
            "aligned = vib.resample(\"1s\").mean().interpolate().join(temp.resample(\"1s\").mean().interpolate())",
            "client.subscribe(\"plant/+/vibration\")\nclient.on_message = handle_reading",
        ],
    },
    Theme {
        scenario: "E-commerce Product Price Scraper",
        stratum: "forum",
        knowledge: &[
            ("HTML Document Structure", "product data sits in nested tags and attributes", Some(("CSS Selector Extraction", "target price and title nodes precisely"))),
            ("Rate Limiting", "sites throttle or ban aggressive clients", Some(("Polite Crawling", "space requests and honour robots rules"))),
            ("Price Normalization", "currencies and formats differ per shop", None),
        ],
        coding: &[
            (1, "BeautifulSoup Parsing", "pull fields out of fetched pages"),
            (1, "requests Sessions", "reuse connections and headers across pages"),
            (0, "Retry With Backoff", "recover from transient HTTP errors"),
            (2, "Hash Map Counting", "deduplicate products seen on several pages"),
        ],
        sentences: &[
            "I am scraping product listings from a few online shops to track price changes every day.",
            "The price sits inside a span whose class name changes between category pages.",
            "After a few hundred requests the site starts returning status 429 and then blocks my address.",
            "Prices come as strings like 1.299,00 EUR or $1,299.00 and I need plain numbers.",
            "Pagination links are generated with JavaScript so the next page URL is not in the HTML.",
            "The same product appears on several category pages and ends up duplicated in my output.",
            "I added a sleep between requests but a fixed delay makes the whole crawl take hours.",
            "Using a session object with a browser user agent header reduced the number of errors.",
            "I want to write the results to CSV with product id, title, price and the time it was fetched.",
            "Some pages time out completely and the script crashes instead of retrying later.",
        ],
        code: &[
            "soup = BeautifulSoup(resp.text, \"html.parser\")\nfor card in soup.select(\"div.product-card\"):\n    title = card.select_one(\"h2\").get_text(strip=True)",
            "for attempt in range(5):\n    resp = session.get(url, timeout=10)\n    if resp.status_code != 429:\n        break\n    time.sleep(2 ** attempt)",
            "price = float(raw.replace(\".\", \"\").replace(\",\", \".\").rstrip(\" EUR\"))",
        ],
    },
];

const CATEGORY_HEADINGS: [&str; 3] =
    ["Problem-solving and Design Thinking", "Tools and Frameworks", "Algorithms and Data Structures"];

fn document_text(theme: &Theme, rng: &mut ChaCha8Rng, serial: usize) -> String {
    let mut sentences: Vec<&str> = theme.sentences.to_vec();
    sentences.shuffle(rng);
    let take = rng.gen_range(6..=9);
    let mut text = format!("Question {serial}: ");
    text.push_str(&sentences[..take / 2].join(" "));
    text.push_str("\n\n");
    text.push_str(&format!("```python\n{}\n```\n\n", theme.code.choose(rng).unwrap()));
    text.push_str(&sentences[take / 2..take].join(" "));
    let _ = write!(text, " Environment: Python 3.{} with {} workers, run {}.", rng.gen_range(8..13), rng.gen_range(2..33), serial);
    text
}

/// An extraction reply in the grammar the parser accepts.
fn extraction_reply(theme: &Theme, rng: &mut ChaCha8Rng, serial: usize) -> String {
    let n_dk = rng.gen_range(1..=theme.knowledge.len().min(3));
    let dks: Vec<_> = theme.knowledge.choose_multiple(rng, n_dk).collect();
    let n_cs = rng.gen_range(1..=3);
    let css: Vec<_> = theme.coding.choose_multiple(rng, n_cs).collect();
    let variant = |usage: &str| format!("{usage} (case {serial})");

    let mut out = format!("Application Scenario:\n{}\n\nDomain Knowledge:\n", theme.scenario);
    for (i, (name, usage, _)) in dks.iter().enumerate() {
        let _ = writeln!(out, "{}. {}: {}", i + 1, name, variant(usage));
    }
    out.push_str("\nDomain Skill:\n");
    for (i, (name, _, skill)) in dks.iter().enumerate() {
        let _ = writeln!(out, "{}. {}:", i + 1, name);
        match skill {
            Some((skill, usage)) => {
                let _ = writeln!(out, "{}.1. {}: {}", i + 1, skill, variant(usage));
            }
            None => {
                let _ = writeln!(out, "{}.1. NA", i + 1);
            }
        }
    }
    out.push_str("\nCoding Skill:\n");
    for (cat, heading) in CATEGORY_HEADINGS.iter().enumerate() {
        let _ = writeln!(out, "{heading}:");
        match css.iter().find(|c| c.0 == cat) {
            Some((_, name, usage)) => {
                let _ = writeln!(out, "1. {}: {}", name, variant(usage));
            }
            None => out.push_str("NA\n"),
        }
    }
    out
}

fn doc(id: String, source: Source, stratum: &str, text: String) -> SeedDocument {
    SeedDocument::new(id, source, stratum, text)
}

fn source_for(stratum: &str) -> Source {
    match stratum {
        "kaggle" => Source::Notebook,
        "stackoverflow" => Source::ForumDump,
        _ => Source::Other,
    }
}

fn main() -> std::io::Result<()> {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/mini-corpus");
    let fixtures = root.join("fixtures");
    if fixtures.exists() {
        fs::remove_dir_all(&fixtures)?;
    }
    fs::create_dir_all(&fixtures)?;

    let mut rng = derive_rng(SEED, "mini-corpus", 0);
    let mut docs = Vec::new();
    let mut replies = Vec::new();

    // 38 ordinary documents spread over the themes; the last one gets no
    // fixture so the extraction skip path is exercised.
    for serial in 0..38 {
        let theme = &THEMES[serial % THEMES.len()];
        let text = document_text(theme, &mut rng, serial);
        let d = doc(format!("doc-{serial:03}"), source_for(theme.stratum), theme.stratum, text);
        if serial != 37 {
            replies.push((d.clone(), extraction_reply(theme, &mut rng, serial)));
        }
        docs.push(d);
    }

    // Near duplicates: one changed word each. Whichever copy survives has a fixture.
    for (k, src) in [3usize, 8].into_iter().enumerate() {
        let base = docs[src].clone();
        let text = base.text.replacen("I ", "We ", 1);
        let d = doc(format!("doc-near-{k}"), base.source, &base.stratum, text);
        let reply = replies.iter().find(|(r, _)| r.id == base.id).unwrap().1.clone();
        replies.push((d.clone(), reply));
        docs.push(d);
    }
    // Exact duplicates up to trailing whitespace.
    for (k, src) in [5usize, 12].into_iter().enumerate() {
        let base = docs[src].clone();
        let text = base.text.lines().map(|l| format!("{l}  ")).collect::<Vec<_>>().join("\n");
        docs.push(doc(format!("doc-exact-{k}"), base.source, &base.stratum, text));
    }
    // Too short.
    for k in 0..3 {
        let text = format!("How do I reverse a list in Python? Tried reversed() but got an iterator back. ({k})");
        docs.push(doc(format!("doc-short-{k}"), Source::ForumDump, "stackoverflow", text));
    }
    // Too long.
    let long = (0..520).map(|i| format!("Line {i} of a very long notebook output dump. ")).collect::<String>();
    docs.push(doc("doc-long-0".into(), Source::Notebook, "kaggle", long));
    // Garbled.
    for k in 0..2 {
        let mut chars: Vec<char> = docs[k].text.chars().collect();
        for i in 0..40 {
            chars.insert(i * 13, if i % 2 == 0 { '\u{FFFD}' } else { '\u{0007}' });
        }
        let text: String = chars.into_iter().collect();
        docs.push(doc(format!("doc-garbled-{k}"), Source::Other, "forum", text));
    }
    // Non-Latin script.
    for k in 0..2 {
        let text = "Как прочитать большой CSV файл по частям и посчитать среднее значение по каждой группе? ".repeat(8 + k);
        docs.push(doc(format!("doc-cyrillic-{k}"), Source::ForumDump, "forum", text));
    }
    assert_eq!(docs.len(), 50);

    let gen = BackendConfig::default();
    for (d, reply) in &replies {
        let hash = GenerationRequest::user(&gen, render_extraction_prompt(d)).prompt_hash();
        fs::write(fixtures.join(format!("{hash}.txt")), reply)?;
    }
    fs::write(root.join("scogen.toml"), CONFIG)?;
    write_jsonl(&root.join("corpus.jsonl"), &docs).map_err(std::io::Error::other)?;
    println!("wrote {} documents and {} fixtures to {}", docs.len(), replies.len(), root.display());
    Ok(())
}
