# Root package initialization
VERSION = "0.1.0"
