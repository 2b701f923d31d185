from .lora import LoraConfig, LoraLinear, lora_attach, lora_merge, lora_parameter_count
from .model import CausalTransformer, TransformerConfig
from .sampler import GenerationStream, SamplerConfig, generate, generate_tokens
from .training import (make_optimizer, masked_accuracy, masked_loss, pad_batch,
                       save_generation_trace, load_generation_trace,
                       set_cosine_lr, train_step, write_training_log)

__all__ = [
    "LoraConfig", "LoraLinear", "lora_attach", "lora_merge", "lora_parameter_count",
    "CausalTransformer", "TransformerConfig",
    "GenerationStream", "SamplerConfig", "generate", "generate_tokens",
    "make_optimizer", "masked_accuracy", "masked_loss", "pad_batch",
    "save_generation_trace", "load_generation_trace", "set_cosine_lr",
    "train_step", "write_training_log",
]
