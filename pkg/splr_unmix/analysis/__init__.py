"""Error metrics and experiment presets."""