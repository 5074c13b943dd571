//! Every example runs to completion.

macro_rules! example {
    ($name:ident, $file:literal) => {
        mod $name {
            include!($file);
        }

        #[test]
        fn $name() {
            $name::run_example().unwrap();
        }
    };
}

example!(decode, "../examples/decode.rs");
example!(pitch, "../examples/pitch.rs");
example!(vad, "../examples/vad.rs");
example!(syllables, "../examples/syllables.rs");
example!(fillers, "../examples/fillers.rs");
example!(train, "../examples/train.rs");
example!(stream, "../examples/stream.rs");
example!(eval, "../examples/eval.rs");
example!(bench, "../examples/bench.rs");
example!(synth, "../examples/synth.rs");
example!(config, "../examples/config.rs");
