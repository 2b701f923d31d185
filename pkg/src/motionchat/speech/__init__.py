from .codec import (FRAME_RATE, N_LAYERS, RvqTokens, SpeechCodec, decode_speech,
                    encode_speech, frame_features, timbre_vector,
                    train_speech_codec)
from .synth import (SAMPLE_RATE, UNIT_SAMPLES, SpeechSignal, VoicePrompt,
                    text_to_signal, voice_params, voice_prompt)
from .wav import load_wav, save_wav

__all__ = [
    "FRAME_RATE", "N_LAYERS", "RvqTokens", "SpeechCodec", "decode_speech",
    "encode_speech", "frame_features", "timbre_vector", "train_speech_codec",
    "SAMPLE_RATE", "UNIT_SAMPLES", "SpeechSignal", "VoicePrompt",
    "text_to_signal", "voice_params", "voice_prompt", "load_wav", "save_wav",
]
