use zeroshot_core::bundled;
use zeroshot_core::splits::Quota;

fn count(aspect: &str, split: &str, label: &str, domain: Option<&str>) -> usize {
    match bundled::scheme(aspect)
        .unwrap()
        .cell_count(split, label, domain)
    {
        Some(Quota::Count(n)) => n,
        other => panic!("{aspect}/{split}/{label}: {other:?}"),
    }
}

const EMOTIONS: [&str; 10] = [
    "sadness", "joy", "anger", "disgust", "fear", "surprise", "shame", "guilt", "love", "none",
];
const DOMAINS: [&str; 4] = ["tweets", "events", "fairytales", "artificial sentences"];

// rows per domain, columns in EMOTIONS order; blank cells are 0
const EMOTION_TEST: [[usize; 10]; 4] = [
    [1500, 2150, 1650, 50, 2150, 880, 0, 0, 1100, 1000],
    [300, 200, 400, 400, 200, 0, 300, 300, 0, 0],
    [300, 500, 250, 120, 250, 220, 0, 0, 0, 1000],
    [200, 150, 200, 30, 100, 100, 0, 0, 0, 0],
];
const EMOTION_DEV: [[usize; 10]; 4] = [
    [900, 1050, 400, 40, 1200, 370, 0, 0, 400, 500],
    [150, 150, 150, 150, 150, 0, 100, 100, 0, 0],
    [150, 300, 150, 90, 150, 80, 0, 0, 0, 500],
    [100, 100, 100, 20, 100, 50, 0, 0, 0, 0],
];

#[test]
fn emotion_cells() {
    for (table, split, row_sums, total) in [
        (EMOTION_TEST, "test", [10_480, 2_100, 2_640, 780], 16_000),
        (EMOTION_DEV, "dev", [4_860, 950, 1_420, 470], 7_700),
    ] {
        for (d, domain) in DOMAINS.iter().enumerate() {
            let mut sum = 0;
            for (l, label) in EMOTIONS.iter().enumerate() {
                assert_eq!(
                    count("emotion", split, label, Some(domain)),
                    table[d][l],
                    "{split} {domain} {label}"
                );
                sum += table[d][l];
            }
            assert_eq!(sum, row_sums[d]);
        }
        assert_eq!(
            bundled::scheme("emotion").unwrap().split_total(split),
            Some(total)
        );
    }
    let s = bundled::scheme("emotion").unwrap();
    let seen: Vec<_> = s.train_versions.iter().map(|t| t.seen.clone()).collect();
    assert_eq!(seen[0], ["sadness", "anger", "fear", "shame", "love"]);
    assert_eq!(seen[1], ["joy", "disgust", "surprise", "guilt"]);
    for t in &s.train_versions {
        assert!(t.cells.iter().all(|c| c.count == Quota::AllRemaining));
    }
}

#[test]
fn situation_cells() {
    let labels = [
        "search",
        "evacuation",
        "infrastructure",
        "utilities",
        "water",
        "shelter",
        "medical assistance",
        "food",
        "regime change",
        "terrorism",
        "crime violence",
        "none",
    ];
    let test = [190, 166, 271, 260, 289, 396, 611, 472, 51, 204, 590, 1144];
    let dev = [137, 112, 174, 152, 203, 263, 435, 338, 29, 144, 393, 724];
    let v0 = [327, 0, 445, 0, 492, 0, 1046, 0, 80, 0, 983, 0];
    let v1 = [0, 278, 0, 412, 0, 659, 0, 810, 0, 348, 0, 0];
    for (i, l) in labels.iter().enumerate() {
        assert_eq!(count("situation", "test", l, None), test[i], "{l}");
        assert_eq!(count("situation", "dev", l, None), dev[i], "{l}");
        assert_eq!(count("situation", "train-v0", l, None), v0[i], "{l}");
        assert_eq!(count("situation", "train-v1", l, None), v1[i], "{l}");
    }
    let p = bundled::scheme("situation")
        .unwrap()
        .partition("train-v0")
        .unwrap();
    for absent in [
        "evacuation",
        "utilities",
        "shelter",
        "food",
        "terrorism",
        "none",
    ] {
        assert!(p.is_unseen(absent));
    }
}

#[test]
fn topic_cells() {
    let s = bundled::scheme("topic").unwrap();
    assert_eq!(s.labels.len(), 10);
    for l in &s.labels {
        assert_eq!(count("topic", "test", l, None), 10_000);
        assert_eq!(count("topic", "dev", l, None), 6_000);
    }
    let v0 = [
        "society & culture",
        "health",
        "computers & internet",
        "business & finance",
        "family & relationships",
    ];
    for l in &s.labels {
        let (a, b) = (
            count("topic", "train-v0", l, None),
            count("topic", "train-v1", l, None),
        );
        if v0.contains(&l.as_str()) {
            assert_eq!((a, b), (130_000, 0), "{l}");
        } else {
            assert_eq!((a, b), (0, 130_000), "{l}");
        }
    }
}
