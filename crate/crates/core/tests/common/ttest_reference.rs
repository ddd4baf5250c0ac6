// Reference values from scipy.stats.ttest_rel (two-sided), frozen.
// Fixture 1: d = (1..10)/10 against zeros. Fixture 2: Cushny-Peebles sleep data.
pub const TTEST_REFERENCE: &[(&[f64], &[f64], f64, f64)] = &[
    (&[0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0], &[0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0], 5.744562646538029, 0.00027819601104818546),
    (&[0.7, -1.6, -0.2, -1.2, -0.1, 3.4, 3.7, 0.8, 0.0, 2.0], &[1.9, 0.8, 1.1, 0.1, -0.1, 4.4, 5.5, 1.6, 4.6, 3.4], -4.062127683382037, 0.00283289019738427),
    (&[0.1489, 0.5086, 0.1476, 0.0498], &[0.0961, 0.6152, 0.2596, 0.0661], -1.154135855356299, 0.33204041987274896),
    (&[0.4831, 0.8659, 0.8456, 0.159, 0.593, 0.2021, 0.6028, 0.5348, 0.2146, 0.0021, 0.8664], &[0.433, 0.7642, 0.6661, 0.1844, 0.5449, 0.1111, 0.4775, 0.5383, 0.1442, 0.0, 0.7293], 3.6567045626609103, 0.00441307362114228),
    (&[0.4966, 0.2074, 0.6206, 0.3627], &[0.3749, 0.1428, 0.5495, 0.4572], 0.8693240499763779, 0.44863531435073667),
    (&[0.4339, 0.7144, 0.1084, 0.6876, 0.7462, 0.4298, 0.5938, 0.5346], &[0.4394, 0.7528, 0.1499, 0.8091, 0.6616, 0.4666, 0.655, 0.4543], -0.707682239086598, 0.5020178559649369),
    (&[0.3917, 0.4658, 0.6843, 0.2646, 0.3837, 0.3998, 0.9224, 0.3967, 0.1307], &[0.4717, 0.4982, 0.6386, 0.2513, 0.4483, 0.4181, 0.8816, 0.3722, 0.0631], -0.022090675215951577, 0.9829166781462515),
    (&[0.9204, 0.6108, 0.6387, 0.9526, 0.109], &[0.9863, 0.5921, 0.5062, 0.8925, 0.0726], 1.1336107849176629, 0.32029359050592854),
    (&[0.7012, 0.9039, 0.9391, 0.6715, 0.877, 0.0995, 0.3097, 0.5232], &[0.704, 0.8868, 0.9294, 0.7213, 0.7583, 0.0946, 0.2431, 0.5059], 1.281300892755041, 0.2408979578332192),
    (&[0.0338, 0.8827, 0.2689], &[0.0, 0.8378, 0.3413], 0.05616840819912419, 0.9603142264031006),
    (&[0.5139, 0.1208, 0.0821, 0.1901, 0.6804, 0.9641, 0.8439, 0.8795, 0.2794], &[0.4059, 0.0707, 0.0916, 0.2772, 0.6164, 0.9303, 0.7361, 0.6968, 0.2025], 2.286187213120515, 0.05157086412147018),
    (&[0.6473, 0.6344, 0.9419, 0.2691], &[0.7538, 0.5776, 1.0, 0.3619], -1.3526150363863005, 0.26909640669539464),
    (&[0.3726, 0.2187, 0.0461], &[0.3258, 0.1962, 0.0768], 0.5622325817532154, 0.6305660163841709),
    (&[0.3467, 0.7706, 0.1303, 0.241], &[0.3545, 0.6854, 0.1924, 0.1576], 0.6822560179974516, 0.5440336224696586),
    (&[0.7099, 0.2664, 0.2515, 0.2227], &[0.5794, 0.0706, 0.2054, 0.162], 3.1383302675874805, 0.05173037216423329),
    (&[0.9032, 0.2508, 0.0668, 0.243, 0.8505], &[0.8499, 0.2412, 0.1113, 0.3006, 1.0], -1.1019325202603452, 0.3323358280835411),
    (&[0.3087, 0.0618, 0.6436, 0.7306, 0.2985, 0.2937, 0.4291, 0.4168, 0.1139, 0.8426], &[0.2469, 0.073, 0.6253, 0.6978, 0.1846, 0.2206, 0.4537, 0.479, 0.0454, 0.8445], 1.5909882404462905, 0.14607579161342454),
    (&[0.2646, 0.8358, 0.4238, 0.9222, 0.2896, 0.4344, 0.0319, 0.0591, 0.6592], &[0.2182, 0.7965, 0.298, 0.8506, 0.2919, 0.3289, 0.0, 0.0879, 0.4514], 2.774413211238746, 0.024131728444098693),
    (&[0.7637, 0.4207, 0.5555, 0.4343, 0.023, 0.0557, 0.024, 0.2423, 0.2169, 0.1706, 0.3672, 0.1417], &[0.7718, 0.5152, 0.6752, 0.5009, 0.181, 0.1166, 0.0087, 0.2645, 0.2405, 0.2132, 0.3825, 0.1415], -3.285558414454296, 0.007261756092015961),
    (&[0.1552, 0.9032, 0.0756], &[0.092, 0.7545, 0.0], 3.592680775220043, 0.06949581460354537),
];
